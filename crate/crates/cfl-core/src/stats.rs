// SPDX-License-Identifier: Apache-2.0

//! Estimators with standard errors and confidence intervals.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        debug_assert!(successes <= trials);
        Self { successes, trials }
    }

    pub fn record(&mut self, hit: bool) {
        self.trials += 1;
        self.successes += u64::from(hit);
    }

    pub fn merge(&mut self, other: Proportion) {
        self.successes += other.successes;
        self.trials += other.trials;
    }

    pub fn estimate(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.successes as f64 / self.trials as f64)
    }

    /// Binomial standard error `sqrt(p̂(1-p̂)/n)`.
    pub fn se(&self) -> Option<f64> {
        self.estimate().map(|p| (p * (1.0 - p) / self.trials as f64).sqrt())
    }

    /// Wilson score interval at normal quantile `z`.
    pub fn wilson(&self, z: f64) -> Option<(f64, f64)> {
        let p = self.estimate()?;
        let n = self.trials as f64;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Some(((center - half).max(0.0), (center + half).min(1.0)))
    }
}

/// Streaming mean and variance (Welford), mergeable across shards.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &MeanAccumulator) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then_some(self.mean)
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> Option<f64> {
        (self.n > 1).then(|| self.m2 / (self.n - 1) as f64)
    }

    pub fn se(&self) -> Option<f64> {
        self.variance().map(|v| (v / self.n as f64).sqrt())
    }
}

impl FromIterator<f64> for MeanAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::default();
        iter.into_iter().for_each(|x| acc.push(x));
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn proportion_se() {
        let p = Proportion::new(6000, 10_000);
        assert_abs_diff_eq!(p.estimate().unwrap(), 0.6);
        assert_abs_diff_eq!(p.se().unwrap(), 0.004_899, epsilon = 1e-6);
        let (lo, hi) = p.wilson(Z95).unwrap();
        assert!(lo < 0.6 && 0.6 < hi);
        assert_eq!(Proportion::default().estimate(), None);
    }

    #[test]
    fn wilson_at_extremes_stays_in_unit_interval() {
        let (lo, hi) = Proportion::new(0, 20).wilson(Z95).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.2);
    }

    #[test]
    fn welford_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let all: MeanAccumulator = xs.iter().copied().collect();
        let mut a: MeanAccumulator = xs[..37].iter().copied().collect();
        let b: MeanAccumulator = xs[37..].iter().copied().collect();
        a.merge(&b);
        assert_abs_diff_eq!(a.mean().unwrap(), all.mean().unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(a.variance().unwrap(), all.variance().unwrap(), epsilon = 1e-12);
    }
}
