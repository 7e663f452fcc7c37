// SPDX-License-Identifier: Apache-2.0

use crate::params::mart_threshold;

/// The latch `g(x, y, y′, NoJump)`: passes `no_jump` through when either
/// backup is within `1/(64√r)` of the game value `x`, otherwise 0.
pub fn trigger_g(r: usize, x: f64, y: f64, y_prime: f64, no_jump: bool) -> bool {
    trigger_g_with(mart_threshold(r), x, y, y_prime, no_jump)
}

/// [`trigger_g`] with an explicit threshold.
pub fn trigger_g_with(threshold: f64, x: f64, y: f64, y_prime: f64, no_jump: bool) -> bool {
    no_jump && ((y - x).abs() < threshold || (y_prime - x).abs() < threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!(trigger_g(25, 0.5, 0.5, 0.9, true));
        assert!(trigger_g(25, 0.5, 0.9, 0.5, true));
        assert!(!trigger_g(25, 0.5, 0.9, 0.9, true));
        assert!(!trigger_g(25, 0.5, 0.5, 0.5, false));
    }

    #[test]
    fn boundary_is_strict() {
        let t = mart_threshold(25);
        assert!(!trigger_g_with(t, 0.0, t, t, true));
        assert!(trigger_g_with(t, 0.0, t * 0.999, t, true));
    }
}
