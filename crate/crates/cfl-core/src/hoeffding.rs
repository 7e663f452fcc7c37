// SPDX-License-Identifier: Apache-2.0

//! Hoeffding's bound for a uniformly random half-sample.
//!
//! For `x_1..x_n ∈ [0,1]` with mean `μ` and `E` a uniform subset of size `n/2`,
//! `Pr[|μ - (2/n) Σ_{ℓ∈E} x_ℓ| ≥ ε/√n] ≤ 2·exp(-ε²)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::stats::Proportion;
use crate::{CoreError, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingBound<T> {
    /// `2·exp(-ε²)`, possibly above 1.
    pub raw: T,
    /// `min(1, raw)`.
    pub clamped: T,
}

pub fn hoeffding_halfsample_bound<T: Scalar>(n: usize, eps: T) -> Result<HoeffdingBound<T>, CoreError> {
    if n == 0 || n % 2 != 0 {
        return Err(CoreError::OddPopulation(n));
    }
    if !(eps >= T::zero()) {
        return Err(CoreError::BadParameter(format!("eps must be non-negative, got {eps}")));
    }
    let raw = T::lit(2.0) * (-(eps * eps)).exp();
    Ok(HoeffdingBound { raw, clamped: raw.min(T::one()) })
}

/// Frequency of `|μ - mean(E)| ≥ ε/√n` over `subsamples` uniform half-samples.
pub fn halfsample_tail_frequency<R: Rng + ?Sized>(
    values: &[f64],
    eps: f64,
    subsamples: u64,
    rng: &mut R,
) -> Result<Proportion, CoreError> {
    let n = values.len();
    if n == 0 || n % 2 != 0 {
        return Err(CoreError::OddPopulation(n));
    }
    let mu = values.iter().sum::<f64>() / n as f64;
    let cut = eps / (n as f64).sqrt();
    let mut hits = 0;
    for _ in 0..subsamples {
        let idx = rand::seq::index::sample(rng, n, n / 2);
        let m = idx.iter().map(|i| values[i]).sum::<f64>() * 2.0 / n as f64;
        if (mu - m).abs() >= cut {
            hits += 1;
        }
    }
    Ok(Proportion::new(hits, subsamples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bound_examples() {
        let b = hoeffding_halfsample_bound(10, 0.0).unwrap();
        assert_eq!(b.raw, 2.0);
        assert_eq!(b.clamped, 1.0);
        let b = hoeffding_halfsample_bound(10, 2.0).unwrap();
        assert_abs_diff_eq!(b.raw, 0.036_631, epsilon = 1e-6);
        assert!(hoeffding_halfsample_bound(7, 1.0).is_err());
    }
}
