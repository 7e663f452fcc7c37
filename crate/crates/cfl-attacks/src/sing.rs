// SPDX-License-Identifier: Apache-2.0

//! The singletons attack `SingAttack(𝕊₁, 𝕊₀, z, h, γ)`.
//!
//! Before round 1 the adversary fixes random halves `𝔼_z ⊆ 𝕊_z\h`; it aborts,
//! before sending, all corrupted parties but the unique tuple of `𝕊_z(h)` in
//! the first round with `B^{𝔼₁} − B^{𝔼₀} > 3γ/4`.

use cfl_core::seed::StreamRng;
use cfl_protocol::{backup_trajectories, Adversary, AdversaryView, Coins, Decision, Party, Protocol, ProtocolError, TupleSet};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::backups::{keep_pool, mean_bits};
use crate::AttackError;

/// What the adversary saw in one execution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SingRecord {
    /// `B^{𝔼₁}_t − B^{𝔼₀}_t`, one per round acted in.
    pub gap: Vec<f64>,
    pub abort_round: Option<usize>,
}

pub struct SingAttack {
    e1: Vec<Vec<Party>>,
    e0: Vec<Vec<Party>>,
    keep: Vec<Party>,
    gamma: f64,
    record: SingRecord,
    error: Option<ProtocolError>,
}

impl SingAttack {
    /// Draws the halves from `rng`. Requires `|𝕊_z(h)| = 1` and `|𝕊₁|, |𝕊₀| ≥ 2`.
    pub fn new(s1: &TupleSet, s0: &TupleSet, z: bool, h: Party, gamma: f64, rng: &mut StreamRng) -> Result<Self, AttackError> {
        if gamma.is_nan() {
            return Err(AttackError::Config("γ is NaN".into()));
        }
        let pool = keep_pool(if z { s1 } else { s0 }, h);
        if pool.len() != 1 {
            return Err(AttackError::Config(format!("|𝕊_z({h})| = {}, expected 1", pool.len())));
        }
        let e1 = half(s1, h, rng)?;
        let e0 = half(s0, h, rng)?;
        Ok(Self { e1, e0, keep: pool.into_iter().next().unwrap_or_default(), gamma, record: SingRecord::default(), error: None })
    }

    /// The halves `(𝔼₁, 𝔼₀)`.
    pub fn halves(&self) -> (&[Vec<Party>], &[Vec<Party>]) {
        (&self.e1, &self.e0)
    }

    pub fn record(&self) -> &SingRecord {
        &self.record
    }

    pub fn error(&self) -> Option<&ProtocolError> {
        self.error.as_ref()
    }

    fn gap(&self, view: &AdversaryView<'_>) -> Result<f64, ProtocolError> {
        let t = view.round();
        Ok(mean_bits(&view.backups(&self.e1, t)?) - mean_bits(&view.backups(&self.e0, t)?))
    }
}

/// A uniform subset of `set\h` of size `⌊|set|/2⌋`, in the order of `set`.
fn half(set: &TupleSet, h: Party, rng: &mut StreamRng) -> Result<Vec<Vec<Party>>, AttackError> {
    let rest = set.remove(h);
    let size = set.len() / 2;
    if size == 0 || rest.len() < size {
        return Err(AttackError::Config(format!("cannot draw {size} tuples of {} without {h}", set.len())));
    }
    let mut idx = sample(rng, rest.len(), size).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| rest.tuples()[i].clone()).collect())
}

impl Adversary for SingAttack {
    fn decide(&mut self, view: &AdversaryView<'_>) -> Decision {
        if self.error.is_some() {
            return Decision::Continue;
        }
        match self.gap(view) {
            Ok(gap) => {
                self.record.gap.push(gap);
                if gap > 0.75 * self.gamma {
                    self.record.abort_round = Some(view.round());
                    return Decision::AbortBeforeSend { keep: self.keep.clone() };
                }
            }
            Err(e) => self.error = Some(e),
        }
        Decision::Continue
    }
}

/// `max_{i∈[r]} max_z |B^{𝔼_z}_i − B^{𝕊_z}_i|` along the honest execution on
/// `coins`. The half-sample event `E_{r,α}` is this value reaching `α/(8√n)`.
pub fn half_sample_deviation(
    proto: &dyn Protocol,
    coins: &Coins,
    s: [&TupleSet; 2],
    e: [&[Vec<Party>]; 2],
) -> Result<f64, AttackError> {
    let mut sets: Vec<Vec<Party>> = Vec::new();
    let mut ranges = Vec::new();
    for part in [s[0].tuples(), e[0], s[1].tuples(), e[1]] {
        if part.is_empty() {
            return Err(AttackError::Config("empty tuple set".into()));
        }
        ranges.push(sets.len()..sets.len() + part.len());
        sets.extend_from_slice(part);
    }
    let rows = backup_trajectories(proto, coins, &sets)?;
    let mut dev = 0.0f64;
    for row in &rows[1..] {
        for z in 0..2 {
            let bs = mean_bits(&row[ranges[2 * z].clone()]);
            let be = mean_bits(&row[ranges[2 * z + 1].clone()]);
            dev = dev.max((be - bs).abs());
        }
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cfl_core::SeedStream;
    use cfl_protocol::protocols::{ConstantProtocol, MajorityCoin, ScriptedProtocol};
    use cfl_protocol::{run_with_adversary, AbortKind};

    fn with_pivot(pivot: Party, others: &[Party]) -> TupleSet {
        TupleSet::new(2, others.iter().map(|&p| vec![pivot, p]).collect()).unwrap()
    }

    #[test]
    fn equal_backups_never_abort() {
        let c = ConstantProtocol::new(6, 3, true).unwrap();
        let s = with_pivot(0, &[1, 2, 3, 5]);
        let stream = SeedStream::new(1);
        for i in 0..50 {
            let coins = Coins::sample(6, c.coin_len(), &mut stream.child(i).rng());
            let mut adv = SingAttack::new(&s, &s, true, 5, 0.01, &mut stream.child(i).rng()).unwrap();
            assert!(run_with_adversary(&c, &mut adv, &[5], &coins).unwrap().abort.is_none());
            assert!(adv.record().gap.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn aborts_at_first_round_with_large_gap() {
        // Backups of tuples with party 0 track party 0's round-2 bit; party 1's backups are 0.
        let p = ScriptedProtocol::from_fn(4, 2, 1, |c| c.party(0)[1]).unwrap();
        let s1 = with_pivot(0, &[2, 3]);
        let s0 = with_pivot(1, &[2, 3]);
        let mut coins = Coins::zeros(4, 2);
        coins.party_mut(0)[1] = true;
        let mut rng = SeedStream::new(0).rng();
        let mut adv = SingAttack::new(&s1, &s0, true, 3, 1.0, &mut rng).unwrap();
        let ex = run_with_adversary(&p, &mut adv, &[3], &coins).unwrap();
        let ev = ex.abort.unwrap();
        assert_eq!((ev.round, ev.kind), (1, AbortKind::BeforeSend));
        assert_eq!(ev.survivors, vec![0, 3]);
        assert_eq!(adv.record().gap, vec![1.0]);
    }

    #[test]
    fn halves_have_half_size_and_exclude_h() {
        let s = with_pivot(0, &[1, 2, 3, 4, 5, 6, 7]);
        let mut rng = SeedStream::new(2).rng();
        let adv = SingAttack::new(&s, &s, false, 7, 0.1, &mut rng).unwrap();
        for e in [adv.halves().0, adv.halves().1] {
            assert_eq!(e.len(), 3);
            assert!(e.iter().all(|t| !t.contains(&7)));
        }
    }

    #[test]
    fn deviation_is_zero_for_full_halves_and_bounded() {
        let m = MajorityCoin::new(6, 3).unwrap();
        let s1 = with_pivot(0, &[1, 2, 3, 4]);
        let s0 = with_pivot(5, &[1, 2, 3, 4]);
        let coins = Coins::sample(6, m.coin_len(), &mut SeedStream::new(3).rng());
        let d = half_sample_deviation(&m, &coins, [&s1, &s0], [s1.tuples(), s0.tuples()]).unwrap();
        assert_eq!(d, 0.0);
        let e1 = &s1.tuples()[..2];
        let e0 = &s0.tuples()[2..];
        let d = half_sample_deviation(&m, &coins, [&s1, &s0], [e1, e0]).unwrap();
        assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn rejects_non_singleton_survivors() {
        let s = TupleSet::new(2, vec![vec![0, 3], vec![1, 3], vec![0, 1]]).unwrap();
        let mut rng = SeedStream::new(0).rng();
        assert!(SingAttack::new(&s, &s, true, 3, 0.1, &mut rng).is_err());
        assert!(SingAttack::new(&s, &s, true, 2, 0.1, &mut rng).is_err());
    }
}
