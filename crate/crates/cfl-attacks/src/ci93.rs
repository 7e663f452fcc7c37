// SPDX-License-Identifier: Apache-2.0

//! The transcript-conditioned `1/√r` attack, used as an exact baseline on
//! protocols whose coin space can be enumerated.
//!
//! In round `t` the adversary, corrupting everyone but `h`, compares
//! `X_t = E[out | T_{≤t}]` with `E[Bckp({h}, t−1) | T_{≤t}]` and aborts
//! everyone before sending when the backup is `1/(2√r)` better for its target.

use std::collections::HashMap;

use cfl_protocol::protocols::{enumerate_coins, MAX_ENUMERATION_BITS};
use cfl_protocol::{backup_trajectories, run_honest, Adversary, AdversaryView, Decision, Party, Protocol, Round};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::AttackError;

/// Sums over the executions sharing one transcript prefix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Tally {
    out: u64,
    backup: u64,
    count: u64,
}

/// Exact conditional expectations over `T_{≤t}` for one honest party.
pub struct Ci93Oracle {
    h: Party,
    r: usize,
    rounds: Vec<HashMap<Vec<u8>, Tally>>,
}

fn push_round(key: &mut Vec<u8>, round: &Round) {
    for p in 0..round.n() {
        match round.message(p) {
            Some(m) => {
                key.extend_from_slice(&(m.len() as u32).to_le_bytes());
                key.extend_from_slice(m);
            }
            None => key.extend_from_slice(&u32::MAX.to_le_bytes()),
        }
    }
}

impl Ci93Oracle {
    /// Enumerates every coin assignment of `proto`.
    pub fn build(proto: &dyn Protocol, h: Party) -> Result<Self, AttackError> {
        let bits = proto.coin_bits();
        if bits > MAX_ENUMERATION_BITS {
            return Err(AttackError::CoinSpaceTooLarge { bits, limit: MAX_ENUMERATION_BITS });
        }
        if h >= proto.n() {
            return Err(AttackError::Config(format!("party {h} outside [n]")));
        }
        let r = proto.rounds();
        let rows: Vec<(Vec<Vec<u8>>, Vec<bool>, bool)> = enumerate_coins(proto)?
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|coins| {
                let (t, out) = run_honest(proto, &coins)?;
                let backups = backup_trajectories(proto, &coins, &[vec![h]])?;
                let mut key = Vec::new();
                let keys = t
                    .rounds()
                    .iter()
                    .map(|round| {
                        push_round(&mut key, round);
                        key.clone()
                    })
                    .collect();
                Ok((keys, backups.iter().map(|row| row[0]).collect(), out))
            })
            .collect::<Result<_, AttackError>>()?;
        let mut rounds = vec![HashMap::new(); r + 1];
        for (keys, backups, out) in rows {
            for (i, key) in keys.into_iter().enumerate() {
                let e: &mut Tally = rounds[i + 1].entry(key).or_default();
                e.out += u64::from(out);
                e.backup += u64::from(backups[i]);
                e.count += 1;
            }
        }
        Ok(Self { h, r, rounds })
    }

    pub fn honest_party(&self) -> Party {
        self.h
    }

    pub fn rounds(&self) -> usize {
        self.r
    }

    /// `(E[out | T_{≤t}], E[Bckp({h}, t−1) | T_{≤t}])` for the transcript
    /// `prefix ‖ current`, if reachable.
    pub fn expectations(&self, prefix: &[Round], current: &Round) -> Option<(f64, f64)> {
        let t = prefix.len() + 1;
        if t > self.r {
            return None;
        }
        let mut key = Vec::new();
        prefix.iter().for_each(|round| push_round(&mut key, round));
        push_round(&mut key, current);
        self.rounds[t].get(&key).map(|e| (e.out as f64 / e.count as f64, e.backup as f64 / e.count as f64))
    }
}

/// What the adversary saw in one execution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ci93Record {
    /// `X_t`, one per round acted in.
    pub x: Vec<f64>,
    pub abort_round: Option<usize>,
}

pub struct Ci93Attack<'a> {
    oracle: &'a Ci93Oracle,
    sign: f64,
    threshold: f64,
    record: Ci93Record,
}

impl<'a> Ci93Attack<'a> {
    /// Attack towards `z` with threshold `1/(2√r)`.
    pub fn new(oracle: &'a Ci93Oracle, z: bool) -> Self {
        Self::with_threshold(oracle, z, 1.0 / (2.0 * (oracle.rounds() as f64).sqrt()))
    }

    /// `threshold = +∞` never aborts.
    pub fn with_threshold(oracle: &'a Ci93Oracle, z: bool, threshold: f64) -> Self {
        Self { oracle, sign: if z { 1.0 } else { -1.0 }, threshold, record: Ci93Record::default() }
    }

    pub fn record(&self) -> &Ci93Record {
        &self.record
    }
}

impl Adversary for Ci93Attack<'_> {
    fn decide(&mut self, view: &AdversaryView<'_>) -> Decision {
        let Some((x, z)) = self.oracle.expectations(view.prefix(), view.current_round()) else {
            return Decision::Continue;
        };
        self.record.x.push(x);
        if self.sign * (z - x) >= self.threshold {
            self.record.abort_round = Some(view.round());
            Decision::AbortBeforeSend { keep: Vec::new() }
        } else {
            Decision::Continue
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cfl_protocol::protocols::{exact_output_probability, ConstantProtocol, MajorityCoin, ParityProtocol};
    use cfl_protocol::{backup_value, run_with_adversary};

    fn exact_bias(proto: &dyn Protocol, oracle: &Ci93Oracle, z: bool, threshold: f64) -> f64 {
        let h = oracle.honest_party();
        let mut ones = 0u64;
        let mut total = 0u64;
        for coins in enumerate_coins(proto).unwrap() {
            let mut adv = Ci93Attack::with_threshold(oracle, z, threshold);
            ones += u64::from(run_with_adversary(proto, &mut adv, &[h], &coins).unwrap().honest_out);
            total += 1;
        }
        ones as f64 / total as f64 - 0.5
    }

    #[test]
    fn constant_protocol_output_is_unchanged() {
        let c = ConstantProtocol::new(2, 3, true).unwrap();
        let o = Ci93Oracle::build(&c, 1).unwrap();
        let honest = exact_output_probability(&c).unwrap() - 0.5;
        for z in [false, true] {
            assert_eq!(exact_bias(&c, &o, z, 1.0 / (2.0 * 3f64.sqrt())), honest);
        }
    }

    #[test]
    fn disabled_matches_honest() {
        let m = MajorityCoin::new(3, 3).unwrap();
        let o = Ci93Oracle::build(&m, 2).unwrap();
        let honest = exact_output_probability(&m).unwrap() - 0.5;
        assert_eq!(exact_bias(&m, &o, true, f64::INFINITY), honest);
    }

    #[test]
    fn single_round_aborts_iff_expectations_differ() {
        // One-round parity between two parties: after seeing party 1's bit the
        // output is known, while party 1 alone outputs its own bit.
        let p = ParityProtocol::new(2, 1).unwrap();
        let o = Ci93Oracle::build(&p, 1).unwrap();
        for coins in enumerate_coins(&p).unwrap() {
            let (t, out) = run_honest(&p, &coins).unwrap();
            let (x, z) = o.expectations(&[], &t.rounds()[0]).unwrap();
            assert_eq!(x, f64::from(u8::from(out)));
            assert_eq!(z, f64::from(u8::from(backup_value(&p, &coins, &[1], 0).unwrap())));
            let mut adv = Ci93Attack::new(&o, true);
            let ex = run_with_adversary(&p, &mut adv, &[1], &coins).unwrap();
            assert_eq!(ex.abort.is_some(), z - x >= 0.5);
        }
    }

    #[test]
    fn majority_toy_is_biased() {
        let m = MajorityCoin::new(2, 3).unwrap();
        let o = Ci93Oracle::build(&m, 1).unwrap();
        let b1 = exact_bias(&m, &o, true, 1.0 / (2.0 * 3f64.sqrt()));
        let b0 = exact_bias(&m, &o, false, 1.0 / (2.0 * 3f64.sqrt()));
        assert!(b1 > 0.0 || b0 < 0.0, "b1 = {b1}, b0 = {b0}");
    }

    #[test]
    fn refuses_large_coin_spaces() {
        let m = MajorityCoin::new(8, 3).unwrap();
        assert!(matches!(Ci93Oracle::build(&m, 0), Err(AttackError::CoinSpaceTooLarge { .. })));
    }
}
