// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{coupled_u_sequence, diffs, sum_of_squares, Ensemble, Sequence};
use crate::stats::{MeanAccumulator, Proportion, Z95};
use crate::Scalar;

/// Sum-of-squares level in the gap results.
pub const SOS_THRESHOLD: f64 = 1.0 / 16.0;
/// Lower bound on `Pr[Σ Y_i² ≥ 1/16]` and on the jump probability.
pub const GAP_PROBABILITY: f64 = 1.0 / 20.0;
/// Constant in the upper bound on `E[U_r²] - 1/4`.
pub const COUPLED_UPPER: f64 = 0.18;
const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExMachinaReport {
    /// Estimate and SE of `E[X_r² - X_0²]`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// Estimate and SE of `E[Σ Y_i²]`.
    pub rhs: f64,
    pub rhs_se: f64,
    /// Paired difference `lhs - rhs` and its SE.
    pub gap: f64,
    pub gap_se: f64,
    /// `2rδ`.
    pub slack: f64,
    /// `|gap| ≤ slack + 3·gap_se`.
    pub holds: bool,
}

/// Checks `E[X_r² - X_0²] ∈ E[Σ Y_i²] ± 2rδ` with a paired 3-SE cushion.
pub fn check_ex_machina<T: Scalar>(ens: &Ensemble<T>, delta: f64) -> ExMachinaReport {
    let (mut lhs, mut rhs, mut gap) = (MeanAccumulator::default(), MeanAccumulator::default(), MeanAccumulator::default());
    for s in ens.sequences() {
        let (x0, xr) = (s.first().as_f64(), s.last().as_f64());
        let l = xr * xr - x0 * x0;
        let q = sum_of_squares(s).as_f64();
        lhs.push(l);
        rhs.push(q);
        gap.push(l - q);
    }
    let slack = 2.0 * ens.r() as f64 * delta;
    let g = gap.mean().unwrap_or(0.0);
    let gap_se = gap.se().unwrap_or(0.0);
    ExMachinaReport {
        lhs: lhs.mean().unwrap_or(0.0),
        lhs_se: lhs.se().unwrap_or(0.0),
        rhs: rhs.mean().unwrap_or(0.0),
        rhs_se: rhs.se().unwrap_or(0.0),
        gap: g,
        gap_se,
        slack,
        holds: g.abs() <= slack + 3.0 * gap_se,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    /// `Σ Y_i² ≥ 1/16` over sequences with valid endpoints.
    pub sos: Proportion,
    /// `∃i |Y_i| ≥ 1/(4√r)` over sequences with valid endpoints.
    pub jump: Proportion,
    /// Sequences with `X_0 ≠ 1/2` or `X_r ∉ {0,1}`; excluded from the counts above.
    pub endpoint_violators: u64,
    pub jump_threshold: f64,
}

impl GapStats {
    pub fn p_sos(&self) -> f64 {
        self.sos.estimate().unwrap_or(0.0)
    }

    pub fn p_jump(&self) -> f64 {
        self.jump.estimate().unwrap_or(0.0)
    }

    pub fn p_sos_ci(&self) -> (f64, f64) {
        self.sos.wilson(Z95).unwrap_or((0.0, 1.0))
    }

    pub fn p_jump_ci(&self) -> (f64, f64) {
        self.jump.wilson(Z95).unwrap_or((0.0, 1.0))
    }
}

fn valid_endpoints<T: Scalar>(s: &Sequence<T>) -> bool {
    let (x0, xr) = (s.first().as_f64(), s.last().as_f64());
    (x0 - 0.5).abs() <= ENDPOINT_TOL && (xr.abs() <= ENDPOINT_TOL || (xr - 1.0).abs() <= ENDPOINT_TOL)
}

pub fn gap_stats<T: Scalar>(ens: &Ensemble<T>) -> GapStats {
    let jump_threshold = 1.0 / (4.0 * (ens.r() as f64).sqrt());
    let mut out = GapStats {
        sos: Proportion::default(),
        jump: Proportion::default(),
        endpoint_violators: 0,
        jump_threshold,
    };
    for s in ens.sequences() {
        if !valid_endpoints(s) {
            out.endpoint_violators += 1;
            continue;
        }
        out.sos.record(sum_of_squares(s).as_f64() >= SOS_THRESHOLD);
        out.jump.record(diffs(s).y().iter().any(|y| y.as_f64().abs() >= jump_threshold));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledUReport {
    /// True when sequences were reflected so that `Pr[X_r = 1] ≥ 1/2`.
    pub reflected: bool,
    pub e_ur2: f64,
    pub e_ur2_se: f64,
    /// `E[U_r²] - 1/4` is compared against `0.18 + 2rδ`.
    pub upper_bound: f64,
    pub upper_ok: bool,
    /// `1/2 - p_sos`.
    pub lower_bound: f64,
    pub p_sos_se: f64,
    pub lower_ok: bool,
}

/// Evaluates both sides of the coupled-sequence inequality chain.
pub fn check_coupled_u<T: Scalar>(ens: &Ensemble<T>, delta: f64) -> CoupledUReport {
    let ones = ens.sequences().iter().filter(|s| (s.last().as_f64() - 1.0).abs() <= ENDPOINT_TOL).count();
    let reflected = 2 * ones < ens.len();
    let mut ur2 = MeanAccumulator::default();
    let mut sos = Proportion::default();
    for s in ens.sequences() {
        let s = if reflected { s.reflect() } else { s.clone() };
        let u = coupled_u_sequence(&s).last().as_f64();
        ur2.push(u * u);
        sos.record(sum_of_squares(&s).as_f64() >= SOS_THRESHOLD);
    }
    let e = ur2.mean().unwrap_or(0.0);
    let se = ur2.se().unwrap_or(0.0);
    let p_sos_se = sos.se().unwrap_or(0.0);
    let upper_bound = COUPLED_UPPER + 2.0 * ens.r() as f64 * delta;
    let lower_bound = 0.5 - sos.estimate().unwrap_or(0.0);
    CoupledUReport {
        reflected,
        e_ur2: e,
        e_ur2_se: se,
        upper_bound,
        upper_ok: e - 0.25 <= upper_bound + 3.0 * se,
        lower_bound,
        p_sos_se,
        lower_ok: e + 3.0 * (se + p_sos_se) >= lower_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::{generators, EnsembleMeta};
    use crate::SeedStream;

    #[test]
    fn constants_satisfy_identity_trivially() {
        let rep = check_ex_machina(&generators::constant::<f64>(5, 0.5, 50), 0.0);
        assert_eq!((rep.lhs, rep.rhs), (0.0, 0.0));
        assert!(rep.holds);
    }

    #[test]
    fn all_jump_ensemble() {
        let mut x = vec![0.5];
        x.extend([1.0; 4]);
        let seqs = vec![Sequence::new(x).unwrap(); 10];
        let ens = Ensemble::new(seqs, EnsembleMeta { generator: "jump".into(), r: 4, seed: 0 }).unwrap();
        let g = gap_stats(&ens);
        assert_eq!((g.p_jump(), g.p_sos()), (1.0, 1.0));
        assert_eq!(g.endpoint_violators, 0);
    }

    #[test]
    fn majority_r3_always_jumps() {
        let ens = generators::majority_doob::<f64>(3, 2000, &SeedStream::new(1)).unwrap();
        assert_eq!(gap_stats(&ens).p_jump(), 1.0);
    }

    #[test]
    fn endpoint_violators_are_counted() {
        let g = gap_stats(&generators::constant::<f64>(3, 0.5, 7));
        assert_eq!(g.endpoint_violators, 7);
        assert_eq!(g.sos.trials, 0);
    }

    #[test]
    fn coupled_u_on_doob() {
        let ens = generators::majority_doob::<f64>(21, 20_000, &SeedStream::new(9)).unwrap();
        let rep = check_coupled_u(&ens, 0.0);
        assert!(rep.upper_ok && rep.lower_ok, "{rep:?}");
    }
}
