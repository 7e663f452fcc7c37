// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SamplingInstance;
use crate::grid::SNAP;
use crate::laplace::Laplace;
use crate::stats::Proportion;
use crate::{Scalar, SeedStream};

/// Result of one run. `halt_round` is 1-based; `halt_round == r` means no
/// early halt.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome<T> {
    pub chosen_h: usize,
    pub halt_round: usize,
    pub reward: T,
}

impl<T> Outcome<T> {
    pub fn halted_early(&self, r: usize) -> bool {
        self.halt_round != r
    }
}

/// Runs the experiment with a uniformly drawn party.
pub fn run_lapexp<T: Scalar, R: Rng + ?Sized>(inst: &SamplingInstance<T>, rng: &mut R) -> Outcome<T> {
    let h = rng.random_range(0..inst.n());
    run_lapexp_for(inst, h, rng)
}

/// Runs the experiment for a fixed party `h`, one Laplace draw per round
/// `i < r`. The halting decision reads only `s_i^{\h}`.
pub fn run_lapexp_for<T: Scalar, R: Rng + ?Sized>(inst: &SamplingInstance<T>, h: usize, rng: &mut R) -> Outcome<T> {
    let lap = Laplace::new(inst.lambda()).expect("instance lambda is positive");
    let r = inst.r();
    for i in 0..r - 1 {
        let nu = lap.sample(rng);
        if inst.leave_out(i, h) + nu >= inst.gamma() {
            return Outcome { chosen_h: h, halt_round: i + 1, reward: inst.value(i, h) };
        }
    }
    Outcome { chosen_h: h, halt_round: r, reward: inst.value(r - 1, h) }
}

/// Deterministic baseline: halt at the first round `i < r` whose mean
/// (leave-one-out when `leave_out_mean`) is at least `tsh`, up to a `1e-12`
/// snap for floating-point means.
pub fn run_threshold<T: Scalar>(inst: &SamplingInstance<T>, h: usize, tsh: T, leave_out_mean: bool) -> Outcome<T> {
    let r = inst.r();
    for i in 0..r - 1 {
        let m = if leave_out_mean { inst.leave_out(i, h) } else { inst.mean(i) };
        if m >= tsh - T::lit(SNAP) {
            return Outcome { chosen_h: h, halt_round: i + 1, reward: inst.value(i, h) };
        }
    }
    Outcome { chosen_h: h, halt_round: r, reward: inst.value(r - 1, h) }
}

/// Threshold-strategy reward averaged over a uniform party.
pub fn threshold_expected_reward<T: Scalar>(inst: &SamplingInstance<T>, tsh: T, leave_out_mean: bool) -> T {
    let total = (0..inst.n()).fold(T::zero(), |a, h| a + run_threshold(inst, h, tsh, leave_out_mean).reward);
    total / T::from_usize_lossy(inst.n())
}

/// Per-round halting probabilities for party `h`; the last entry is `Pr[J = r]`.
fn halt_distribution<T: Scalar>(inst: &SamplingInstance<T>, h: usize) -> Vec<T> {
    let lap = Laplace::new(inst.lambda()).expect("instance lambda is positive");
    let mut survive = T::one();
    let mut out = Vec::with_capacity(inst.r());
    for i in 0..inst.r() - 1 {
        let p = lap.tail(inst.gamma() - inst.leave_out(i, h));
        out.push(survive * p);
        survive = survive * (T::one() - p);
    }
    out.push(survive);
    out
}

/// Closed-form `Pr[J ≠ r | H = h]` for every party.
pub fn exact_halt_probs<T: Scalar>(inst: &SamplingInstance<T>) -> Vec<T> {
    (0..inst.n())
        .map(|h| T::one() - *halt_distribution(inst, h).last().expect("r ≥ 1"))
        .collect()
}

/// Closed-form `E[s_J^H]`.
pub fn exact_expected_reward<T: Scalar>(inst: &SamplingInstance<T>) -> T {
    let total = (0..inst.n()).fold(T::zero(), |acc, h| {
        halt_distribution(inst, h)
            .iter()
            .enumerate()
            .fold(acc, |a, (i, &q)| a + q * inst.value(i, h))
    });
    total / T::from_usize_lossy(inst.n())
}

/// Monte Carlo `Pr[J ≠ r | H = h]`; party `h` uses `stream.child(h)`.
pub fn estimate_halt_probs<T: Scalar>(inst: &SamplingInstance<T>, runs: u64, stream: &SeedStream) -> Vec<Proportion> {
    (0..inst.n())
        .map(|h| {
            let mut rng = stream.child(h as u64).rng();
            let mut prop = Proportion::default();
            for _ in 0..runs {
                prop.record(run_lapexp_for(inst, h, &mut rng).halted_early(inst.r()));
            }
            prop
        })
        .collect()
}
