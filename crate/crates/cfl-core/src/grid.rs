// SPDX-License-Identifier: Apache-2.0

//! Rounding down to a uniform grid `{0, δ, 2δ, ...}`.

use serde::{Deserialize, Serialize};

use crate::{CoreError, Scalar};

/// Relative snap applied to `x/δ` before flooring, so that values a few ulps
/// below a grid point land on it.
pub const SNAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    delta: T,
}

impl<T: Scalar> Grid<T> {
    pub fn new(delta: T) -> Result<Self, CoreError> {
        if !(delta > T::zero() && delta <= T::one()) {
            return Err(CoreError::BadGrid(delta.as_f64()));
        }
        Ok(Self { delta })
    }

    /// The game-value grid `δ = 1/(200r)`.
    pub fn game_value(r: usize) -> Self {
        Self { delta: T::one() / T::lit(200.0 * r.max(1) as f64) }
    }

    /// The sum-of-squares grid `{0, 1/(200r)², ...}`.
    pub fn sum_of_squares(r: usize) -> Self {
        let d = 200.0 * r.max(1) as f64;
        Self { delta: T::one() / T::lit(d * d) }
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Index `k` of the largest grid point `kδ ≤ x` (after snapping).
    pub fn index(&self, x: T) -> i64 {
        (x / self.delta + T::lit(SNAP)).floor().to_i64().unwrap_or(i64::MAX)
    }

    pub fn point(&self, k: i64) -> T {
        T::lit(k as f64) * self.delta
    }

    pub fn round_down(&self, x: T) -> T {
        self.point(self.index(x))
    }
}

/// Largest multiple of `grid.delta()` not exceeding `x`.
pub fn round_down<T: Scalar>(x: T, grid: Grid<T>) -> T {
    grid.round_down(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let g = Grid::new(0.005).unwrap();
        assert_eq!(g.round_down(0.5), 0.5);
        assert_eq!(g.round_down(0.0049), 0.0);
        let q = Grid::new(0.25).unwrap();
        assert_eq!(q.round_down(0.6), 0.5);
        assert!(Grid::new(0.0).is_err());
        assert!(Grid::new(1.5).is_err());
    }

    #[test]
    fn near_multiples_snap_up() {
        let g = Grid::new(0.1).unwrap();
        // 0.3 is 0.299999... in binary and must still map to index 3.
        assert_eq!(g.index(0.1 + 0.2), 3);
        assert_eq!(g.index(0.7), 7);
    }

    #[test]
    fn f32_instance() {
        let g = Grid::<f32>::new(0.25).unwrap();
        assert_eq!(g.round_down(0.6f32), 0.5f32);
    }

    proptest! {
        #[test]
        fn idempotent_and_within_one_step(x in 0.0f64..=1.0, d in 1e-4f64..=1.0) {
            let g = Grid::new(d).unwrap();
            let y = g.round_down(x);
            prop_assert_eq!(g.round_down(y), y);
            prop_assert!(x - y < d);
            prop_assert!(x - y >= -SNAP * d * 2.0);
        }
    }
}
