// SPDX-License-Identifier: Apache-2.0

//! The Laplace-noise attack `DpAttack(𝕊₁, 𝕊₀, z, h, γ)`.
//!
//! Every round the adversary adds `Lap(λ)`, `λ = γ/(4 log r)`, to the
//! leave-`h`-out gap `B^{𝕊₁\h} − B^{𝕊₀\h}`; when the noisy gap exceeds `γ` it
//! aborts, before sending, all corrupted parties but a random tuple of `𝕊_z(h)`.

use cfl_core::laplace::Laplace;
use cfl_core::seed::StreamRng;
use cfl_protocol::{Adversary, AdversaryView, Decision, Party, ProtocolError, TupleSet};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backups::{keep_pool, mean_bits};
use crate::params::dp_lambda;
use crate::AttackError;

/// What the adversary saw in one execution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DpRecord {
    /// Leave-`h`-out gaps, one per round acted in.
    pub gap: Vec<f64>,
    /// Laplace draws, one per round acted in.
    pub noise: Vec<f64>,
    pub abort_round: Option<usize>,
}

pub struct DpAttack {
    s1: Vec<Vec<Party>>,
    s0: Vec<Vec<Party>>,
    pool: Vec<Vec<Party>>,
    gamma: f64,
    noise: Option<Laplace<f64>>,
    rng: StreamRng,
    record: DpRecord,
    error: Option<ProtocolError>,
}

impl DpAttack {
    /// Uses `λ = γ/(4 log r)`; `γ = +∞` never aborts.
    pub fn new(
        s1: &TupleSet,
        s0: &TupleSet,
        z: bool,
        h: Party,
        gamma: f64,
        r: usize,
        rng: StreamRng,
    ) -> Result<Self, AttackError> {
        if r < 2 {
            return Err(AttackError::Config(format!("the Laplace attack needs r ≥ 2, got {r}")));
        }
        Self::with_lambda(s1, s0, z, h, gamma, dp_lambda(gamma, r), rng)
    }

    /// Uses an explicit Laplace scale.
    pub fn with_lambda(
        s1: &TupleSet,
        s0: &TupleSet,
        z: bool,
        h: Party,
        gamma: f64,
        lambda: f64,
        rng: StreamRng,
    ) -> Result<Self, AttackError> {
        if gamma.is_nan() {
            return Err(AttackError::Config("γ is NaN".into()));
        }
        let (m1, m0) = (s1.remove(h), s0.remove(h));
        if m1.is_empty() || m0.is_empty() {
            return Err(AttackError::Config(format!("𝕊₁\\{h} or 𝕊₀\\{h} is empty")));
        }
        let pool = keep_pool(if z { s1 } else { s0 }, h);
        if pool.is_empty() {
            return Err(AttackError::Config(format!("𝕊_z({h}) is empty")));
        }
        let noise = if gamma.is_finite() { Some(Laplace::new(lambda)?) } else { None };
        Ok(Self {
            s1: m1.tuples().to_vec(),
            s0: m0.tuples().to_vec(),
            pool,
            gamma,
            noise,
            rng,
            record: DpRecord::default(),
            error: None,
        })
    }

    pub fn record(&self) -> &DpRecord {
        &self.record
    }

    pub fn error(&self) -> Option<&ProtocolError> {
        self.error.as_ref()
    }

    fn gap(&self, view: &AdversaryView<'_>) -> Result<f64, ProtocolError> {
        let t = view.round();
        Ok(mean_bits(&view.backups(&self.s1, t)?) - mean_bits(&view.backups(&self.s0, t)?))
    }
}

impl Adversary for DpAttack {
    fn decide(&mut self, view: &AdversaryView<'_>) -> Decision {
        if self.error.is_some() {
            return Decision::Continue;
        }
        let Some(noise) = self.noise else { return Decision::Continue };
        let gap = match self.gap(view) {
            Ok(g) => g,
            Err(e) => {
                self.error = Some(e);
                return Decision::Continue;
            }
        };
        let nu = noise.sample(&mut self.rng);
        self.record.gap.push(gap);
        self.record.noise.push(nu);
        if gap + nu > self.gamma {
            self.record.abort_round = Some(view.round());
            let keep = self.pool[self.rng.random_range(0..self.pool.len())].clone();
            Decision::AbortBeforeSend { keep }
        } else {
            Decision::Continue
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cfl_core::SeedStream;
    use cfl_protocol::protocols::{MajorityCoin, ScriptedProtocol};
    use cfl_protocol::{run_honest, run_with_adversary, AbortKind, Coins, Protocol};

    fn pair_sets() -> (TupleSet, TupleSet) {
        let s1 = TupleSet::new(2, vec![vec![0, 4], vec![1, 4], vec![0, 1]]).unwrap();
        let s0 = TupleSet::new(2, vec![vec![2, 4], vec![3, 4], vec![2, 3]]).unwrap();
        (s1, s0)
    }

    #[test]
    fn infinite_gamma_never_aborts() {
        let m = MajorityCoin::new(5, 3).unwrap();
        let (s1, s0) = pair_sets();
        let stream = SeedStream::new(4);
        for i in 0..100 {
            let coins = Coins::sample(5, m.coin_len(), &mut stream.child(i).rng());
            let mut adv = DpAttack::new(&s1, &s0, true, 4, f64::INFINITY, 3, stream.child(i).rng()).unwrap();
            let ex = run_with_adversary(&m, &mut adv, &[4], &coins).unwrap();
            assert!(ex.abort.is_none());
            assert_eq!(ex.honest_out, run_honest(&m, &coins).unwrap().1);
        }
    }

    #[test]
    fn gamma_two_with_tiny_noise_never_aborts() {
        let m = MajorityCoin::new(5, 3).unwrap();
        let (s1, s0) = pair_sets();
        let stream = SeedStream::new(5);
        for i in 0..100 {
            let coins = Coins::sample(5, m.coin_len(), &mut stream.child(i).rng());
            let mut adv = DpAttack::with_lambda(&s1, &s0, false, 4, 2.0, 1e-6, stream.child(i).rng()).unwrap();
            assert!(run_with_adversary(&m, &mut adv, &[4], &coins).unwrap().abort.is_none());
        }
    }

    #[test]
    fn identical_sets_abort_at_laplace_tail_rate() {
        let m = MajorityCoin::new(5, 3).unwrap();
        let s = TupleSet::new(2, vec![vec![0, 4], vec![0, 1], vec![2, 3]]).unwrap();
        let (gamma, lambda) = (0.3, 0.25);
        let stream = SeedStream::new(6);
        let trials = 20_000;
        let mut first = 0u64;
        for i in 0..trials {
            let coins = Coins::sample(5, m.coin_len(), &mut stream.child(i).rng());
            let mut adv = DpAttack::with_lambda(&s, &s, true, 4, gamma, lambda, stream.child(i).rng()).unwrap();
            let ex = run_with_adversary(&m, &mut adv, &[4], &coins).unwrap();
            assert!(adv.record().gap.iter().all(|&g| g == 0.0));
            if ex.abort.as_ref().is_some_and(|e| e.round == 1) {
                first += 1;
                assert_eq!(ex.abort.unwrap().kind, AbortKind::BeforeSend);
            }
        }
        let p = Laplace::new(lambda).unwrap().tail(gamma);
        let p_hat = first as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((p_hat - p).abs() <= 3.0 * se, "p̂ = {p_hat}, p = {p}");
    }

    #[test]
    fn decision_ignores_honest_coins_outside_the_sets() {
        // Party 4's coins never reach a backup of a tuple without 4.
        let p = ScriptedProtocol::from_fn(5, 2, 1, |c| c.party(0)[0] ^ c.party(1)[1] ^ c.party(2)[0]).unwrap();
        let (s1, s0) = pair_sets();
        let stream = SeedStream::new(7);
        for i in 0..200 {
            let coins = Coins::sample(5, 2, &mut stream.child(i).rng());
            let mut other = coins.clone();
            other.party_mut(4).iter_mut().for_each(|b| *b = !*b);
            let mut a = DpAttack::new(&s1, &s0, true, 4, 0.05, 2, stream.child(i).rng()).unwrap();
            let mut b = DpAttack::new(&s1, &s0, true, 4, 0.05, 2, stream.child(i).rng()).unwrap();
            let ea = run_with_adversary(&p, &mut a, &[4], &coins).unwrap();
            let eb = run_with_adversary(&p, &mut b, &[4], &other).unwrap();
            assert_eq!(a.record().abort_round, b.record().abort_round);
            assert_eq!(ea.abort.map(|e| e.round), eb.abort.map(|e| e.round));
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let (s1, s0) = pair_sets();
        let rng = || SeedStream::new(0).rng();
        assert!(DpAttack::new(&s1, &s0, true, 4, 0.1, 1, rng()).is_err());
        assert!(DpAttack::new(&s1, &s0, true, 2, 0.1, 3, rng()).is_err());
        assert!(DpAttack::new(&s1, &s0, true, 4, f64::NAN, 3, rng()).is_err());
        let lone = TupleSet::new(2, vec![vec![0, 4]]).unwrap();
        assert!(DpAttack::new(&lone, &s0, true, 4, 0.1, 3, rng()).is_err());
    }
}
