// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Ensemble;
use crate::grid::Grid;
use crate::stats::MeanAccumulator;
use crate::Scalar;

/// Minimum bin occupancy for a bin to enter `delta_hat`.
pub const DEFAULT_MIN_COUNT: u64 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// Condition on `X_i` alone.
    Weak,
    /// Condition on `X_i` and `Σ_{j<i} (X_{j+1} - X_j)²`.
    SosWeak,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub min_count: u64,
    /// A bin violates when `|mean step| > delta_threshold + 3·SE`.
    pub delta_threshold: f64,
}

impl ClassifyOptions {
    pub fn new(delta_threshold: f64) -> Self {
        Self { min_count: DEFAULT_MIN_COUNT, delta_threshold }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub class: Flavor,
    /// Largest `|E[X_{i+1} - X_i | context]|` over bins with at least `min_count` members.
    pub delta_hat: f64,
    /// Fraction of sequences passing through a violating bin.
    pub gamma_hat: f64,
    /// False when no bin reached `min_count`.
    pub conclusive: bool,
    pub bins_used: usize,
    pub violating_bins: usize,
    pub sparse_bins: usize,
    /// Fraction of (sequence, round) contexts that fell into sparse bins.
    pub sparse_mass: f64,
}

type BinKey = (usize, i64, i64);

fn context_keys<'a, T: Scalar>(
    x: &'a [T],
    grid: &'a Grid<T>,
    flavor: Flavor,
) -> impl Iterator<Item = (BinKey, f64)> + 'a {
    let sos_step = grid.delta().as_f64().powi(2);
    let mut sos = 0.0f64;
    (0..x.len() - 1).map(move |i| {
        let step = x[i + 1].as_f64() - x[i].as_f64();
        let sos_key = match flavor {
            Flavor::Weak => 0,
            Flavor::SosWeak => (sos / sos_step + crate::grid::SNAP).floor() as i64,
        };
        sos += step * step;
        ((i, grid.index(x[i]), sos_key), step)
    })
}

/// Estimates the worst conditional drift by binning histories on the grid.
pub fn classify<T: Scalar>(
    ens: &Ensemble<T>,
    grid: &Grid<T>,
    flavor: Flavor,
    opts: ClassifyOptions,
) -> MartingaleReport {
    let mut bins: HashMap<BinKey, MeanAccumulator> = HashMap::new();
    for s in ens.sequences() {
        for (key, step) in context_keys(s.x(), grid, flavor) {
            bins.entry(key).or_default().push(step);
        }
    }
    let mut delta_hat = 0.0f64;
    let (mut bins_used, mut sparse_bins, mut sparse_members) = (0, 0, 0u64);
    let mut violating = std::collections::HashSet::new();
    for (key, acc) in &bins {
        if acc.count() < opts.min_count {
            sparse_bins += 1;
            sparse_members += acc.count();
            continue;
        }
        bins_used += 1;
        let m = acc.mean().unwrap_or(0.0).abs();
        delta_hat = delta_hat.max(m);
        if m > opts.delta_threshold + 3.0 * acc.se().unwrap_or(0.0) {
            violating.insert(*key);
        }
    }
    let hit = if violating.is_empty() {
        0
    } else {
        ens.sequences()
            .iter()
            .filter(|s| context_keys(s.x(), grid, flavor).any(|(k, _)| violating.contains(&k)))
            .count()
    };
    let contexts = (ens.len() * ens.r()) as f64;
    MartingaleReport {
        class: flavor,
        delta_hat,
        gamma_hat: if ens.is_empty() { 0.0 } else { hit as f64 / ens.len() as f64 },
        conclusive: bins_used > 0,
        bins_used,
        violating_bins: violating.len(),
        sparse_bins,
        sparse_mass: if contexts > 0.0 { sparse_members as f64 / contexts } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::generators;
    use crate::SeedStream;

    #[test]
    fn constants_have_zero_drift() {
        let ens = generators::constant::<f64>(10, 0.5, 100);
        let rep = classify(&ens, &Grid::game_value(10), Flavor::Weak, ClassifyOptions::new(0.001));
        assert!(rep.conclusive);
        assert_eq!(rep.delta_hat, 0.0);
        assert_eq!(rep.gamma_hat, 0.0);
    }

    #[test]
    fn drift_is_detected() {
        let ens = generators::drifting::<f64>(5, 0.1, 0.05, 0.2, 2000, &SeedStream::new(3)).unwrap();
        let rep = classify(&ens, &Grid::new(0.01).unwrap(), Flavor::Weak, ClassifyOptions::new(0.01));
        assert!(rep.delta_hat >= 0.09, "{rep:?}");
        assert!(rep.gamma_hat > 0.5);
    }

    #[test]
    fn tiny_ensemble_is_inconclusive() {
        let ens = generators::constant::<f64>(4, 0.5, 3);
        let rep = classify(&ens, &Grid::game_value(4), Flavor::SosWeak, ClassifyOptions::new(0.0));
        assert!(!rep.conclusive);
        assert_eq!(rep.sparse_mass, 1.0);
    }
}
