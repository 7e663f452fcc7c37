// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::{CoreError, Scalar};

/// Values `s_i^h ∈ [-1,1]` for rounds `i ∈ [r]` and parties `h ∈ [n]`,
/// stored row-major by round, with threshold `γ`, noise scale `λ` and weight `p`.
///
/// Rounds and parties are 0-based in this API.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingInstance<T> {
    values: Vec<Vec<T>>,
    gamma: T,
    lambda: T,
    p: T,
}

impl<T: Scalar> SamplingInstance<T> {
    pub fn new(values: Vec<Vec<T>>, gamma: T, lambda: T, p: T) -> Result<Self, CoreError> {
        let bad = |m: String| Err(CoreError::BadInstance(m));
        let n = values.first().map_or(0, Vec::len);
        if values.is_empty() || n == 0 {
            return bad("need at least one round and one party".into());
        }
        if values.iter().any(|row| row.len() != n) {
            return bad("ragged value matrix".into());
        }
        if values.iter().flatten().any(|&v| !(v >= -T::one() && v <= T::one())) {
            return bad("values must lie in [-1,1]".into());
        }
        let last = &values[values.len() - 1];
        if last.iter().any(|&v| v != last[0]) {
            return bad("final-round values must agree across parties".into());
        }
        if !(gamma >= T::zero() && gamma <= T::one()) {
            return bad(format!("gamma {gamma} outside [0,1]"));
        }
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return bad(format!("lambda {lambda} must be positive"));
        }
        if !(p >= T::zero() && p <= T::lit(0.5)) {
            return bad(format!("p {p} outside [0,1/2]"));
        }
        Ok(Self { values, gamma, lambda, p })
    }

    pub fn with_lambda(self, lambda: T) -> Result<Self, CoreError> {
        Self::new(self.values, self.gamma, lambda, self.p)
    }

    pub fn with_p(self, p: T) -> Result<Self, CoreError> {
        Self::new(self.values, self.gamma, self.lambda, p)
    }

    pub fn n(&self) -> usize {
        self.values[0].len()
    }

    pub fn r(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn value(&self, i: usize, h: usize) -> T {
        self.values[i][h]
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn p(&self) -> T {
        self.p
    }

    /// `s_i = (1/n) Σ_h s_i^h`.
    pub fn mean(&self, i: usize) -> T {
        let sum = self.values[i].iter().fold(T::zero(), |a, &b| a + b);
        sum / T::from_usize_lossy(self.n())
    }

    /// `s_i^{\h} = (s_i - p·s_i^h) / (1 - p)`.
    pub fn leave_out(&self, i: usize, h: usize) -> T {
        (self.mean(i) - self.p * self.values[i][h]) / (T::one() - self.p)
    }

    /// `σ^h = max_i |s_i - s_i^h|`.
    pub fn sigma(&self, h: usize) -> T {
        (0..self.r()).fold(T::zero(), |m, i| m.max((self.mean(i) - self.values[i][h]).abs()))
    }
}

/// Instance on which the deterministic threshold strategy earns only `tsh - σ`.
///
/// Parties `h ∈ [r-1]`; `s_i^h = tsh - σ` when `i = h`, `tsh` otherwise, and
/// `s_r^h = γ`. Defaults are `λ = γ / (4 log₂ r)` (or `γ / 4` for `r < 3`) and
/// `p = 1/n`; override them with [`SamplingInstance::with_lambda`] and
/// [`SamplingInstance::with_p`].
pub fn adversarial_instance<T: Scalar>(r: usize, tsh: T, sigma: T, gamma: T) -> Result<SamplingInstance<T>, CoreError> {
    if r < 3 {
        return Err(CoreError::BadInstance(format!("need r ≥ 3 for two or more parties, got {r}")));
    }
    if !(tsh >= T::zero() && tsh <= gamma) {
        return Err(CoreError::BadInstance(format!("tsh {tsh} outside [0, gamma]")));
    }
    if !(sigma >= T::zero() && sigma <= tsh) {
        return Err(CoreError::BadInstance(format!("sigma {sigma} outside [0, tsh]")));
    }
    let n = r - 1;
    let mut values: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|h| if i == h { tsh - sigma } else { tsh }).collect())
        .collect();
    values.push(vec![gamma; n]);
    let log_r = T::from_usize_lossy(r).log2();
    let lambda = if gamma > T::zero() { gamma / (T::lit(4.0) * log_r) } else { T::one() };
    SamplingInstance::new(values, gamma, lambda, T::one() / T::from_usize_lossy(n))
}
