// SPDX-License-Identifier: Apache-2.0

//! The Laplace distribution with density `exp(-|x|/λ) / 2λ`.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{CoreError, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Laplace<T> {
    lambda: T,
}

impl<T: Scalar> Laplace<T> {
    pub fn new(lambda: T) -> Result<Self, CoreError> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(CoreError::BadScale(lambda.as_f64()));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn density(&self, x: T) -> T {
        (-x.abs() / self.lambda).exp() / (T::lit(2.0) * self.lambda)
    }

    /// Quantile function on `(0, 1)`.
    pub fn inverse_cdf(&self, u: T) -> T {
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        if u < half {
            self.lambda * (two * u).ln()
        } else {
            -self.lambda * (two * (T::one() - u)).ln()
        }
    }

    /// One draw, consuming exactly one uniform from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let u: f64 = rng.sample(Open01);
        self.inverse_cdf(T::lit(u))
    }

    /// `Pr[Lap(λ) ≥ t]` in closed form.
    pub fn tail(&self, t: T) -> T {
        let half = T::lit(0.5);
        if t >= T::zero() {
            half * (-t / self.lambda).exp()
        } else {
            T::one() - half * (t / self.lambda).exp()
        }
    }
}

/// `Pr[Lap(λ) ≥ threshold]`.
pub fn laplace_tail<T: Scalar>(param: Laplace<T>, threshold: T) -> T {
    param.tail(threshold)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceRatioReport<T> {
    pub p: T,
    pub p_prime: T,
    pub eps: T,
    /// `false` when `|γ' - γ| > 1`; the ratio is then not asserted.
    pub precondition_ok: bool,
    /// Both `p/p'` and `p'/p` lie in `1 ± 5ε`. `None` if the precondition failed.
    pub ratio_ok: Option<bool>,
}

/// Compares `p = Pr[Lap(λ) ≥ λγ]` with `p' = Pr[Lap(λ) ≥ λγ']`.
pub fn check_laplace_ratio<T: Scalar>(gamma: T, gamma_prime: T, param: Laplace<T>) -> LaplaceRatioReport<T> {
    let lam = param.lambda();
    let p = param.tail(lam * gamma);
    let p_prime = param.tail(lam * gamma_prime);
    let eps = (gamma_prime - gamma).abs();
    let precondition_ok = eps <= T::one();
    let ratio_ok = precondition_ok.then(|| {
        let slack = T::lit(5.0) * eps + T::lit(1e-12);
        let within = |x: T| (x - T::one()).abs() <= slack;
        within(p / p_prime) && within(p_prime / p)
    });
    LaplaceRatioReport { p, p_prime, eps, precondition_ok, ratio_ok }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn median_and_tails() {
        let l = Laplace::new(1.0).unwrap();
        assert_eq!(l.inverse_cdf(0.5), 0.0);
        assert_eq!(l.tail(0.0), 0.5);
        assert_abs_diff_eq!(l.tail(1.0), 0.5 * (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(l.tail(1.0), 0.183_940, epsilon = 1e-6);
        let l2 = Laplace::new(2.0).unwrap();
        assert_abs_diff_eq!(l2.tail(-2.0), 0.816_060, epsilon = 1e-6);
        assert!(Laplace::new(0.0).is_err());
        assert!(Laplace::new(f64::INFINITY).is_err());
    }

    #[test]
    fn quantile_inverts_tail() {
        let l = Laplace::new(0.7).unwrap();
        for &u in &[0.01, 0.2, 0.5, 0.8, 0.99] {
            let x = l.inverse_cdf(u);
            assert_abs_diff_eq!(1.0 - l.tail(x), u, epsilon = 1e-12);
        }
    }

    #[test]
    fn ratio_examples() {
        let l = Laplace::new(1.0).unwrap();
        let same = check_laplace_ratio(0.3, 0.3, l);
        assert_eq!(same.p, same.p_prime);
        assert_eq!(same.ratio_ok, Some(true));
        let r = check_laplace_ratio(0.5, 0.6, l);
        assert_abs_diff_eq!(r.p, 0.5 * (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.p_prime, 0.5 * (-0.6f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.p / r.p_prime, 0.1f64.exp(), epsilon = 1e-12);
        assert_eq!(r.ratio_ok, Some(true));
        let far = check_laplace_ratio(0.0, 1.5, l);
        assert!(!far.precondition_ok);
        assert_eq!(far.ratio_ok, None);
    }
}
