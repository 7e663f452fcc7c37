// SPDX-License-Identifier: Apache-2.0

//! Honest and adversarial executions.
//!
//! Adversaries are rushing and fail-stop: in every round the honest messages
//! are fixed first, then the adversary sees them (and all corrupted coins) and
//! either lets the corrupted parties send honestly or aborts. An abort is a
//! single event: all corrupted parties outside `keep` abort and never send
//! again. The survivors `U = honest ∪ keep` then output the residual value on
//! the last fully delivered round, i.e. round `t - 1` for a before-send abort
//! in round `t` and round `t` for an after-send abort.

use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

use crate::coins::{CoinView, Coins};
use crate::protocol::{Party, Protocol};
use crate::transcript::{AbortKind, Round, Transcript};
use crate::tuples::TupleSet;
use crate::ProtocolError;

fn check_coins(proto: &dyn Protocol, coins: &Coins) -> Result<(), ProtocolError> {
    let expected = (proto.n(), proto.coin_len());
    let got = (coins.n(), coins.len());
    if expected != got {
        return Err(ProtocolError::CoinShape { expected, got });
    }
    Ok(())
}

fn honest_transcript(proto: &dyn Protocol, coins: &Coins) -> Transcript {
    let mut t = Transcript::new();
    for round in 1..=proto.rounds() {
        let mut r = Round::empty(proto.n());
        for p in 0..proto.n() {
            r.set_message(p, proto.next_message(p, round, coins.party(p), t.rounds()));
        }
        t.push(r);
    }
    t
}

/// Runs every party honestly; the output is the residual value of all parties
/// after round `r`.
pub fn run_honest(proto: &dyn Protocol, coins: &Coins) -> Result<(Transcript, bool), ProtocolError> {
    check_coins(proto, coins)?;
    let t = honest_transcript(proto, coins);
    let all: Vec<Party> = (0..proto.n()).collect();
    let out = proto.residual_output(&all, &coins.view_all(), t.rounds());
    Ok((t, out))
}

/// Replays the honest execution and compares transcripts and outputs.
pub fn replay_check(proto: &dyn Protocol, coins: &Coins) -> Result<(), ProtocolError> {
    let (a, oa) = run_honest(proto, coins)?;
    let (b, ob) = run_honest(proto, coins)?;
    if let Some(i) = a.rounds().iter().zip(b.rounds()).position(|(x, y)| x != y) {
        return Err(ProtocolError::NonDeterministic(i + 1));
    }
    if oa != ob {
        return Err(ProtocolError::NonDeterministic(proto.rounds()));
    }
    Ok(())
}

/// `Bckp(U, i)` along the honest execution on `coins`.
pub fn backup_value(proto: &dyn Protocol, coins: &Coins, survivors: &[Party], round: usize) -> Result<bool, ProtocolError> {
    check_coins(proto, coins)?;
    if round > proto.rounds() {
        return Err(ProtocolError::BadRound { round, rounds: proto.rounds() });
    }
    if let Some(&p) = survivors.iter().find(|&&p| p >= proto.n()) {
        return Err(ProtocolError::BadParty(p));
    }
    let t = honest_transcript(proto, coins);
    Ok(proto.residual_output(survivors, &coins.view(survivors), t.prefix(round)))
}

/// Backups of every set in `sets` for rounds `0..=r`, indexed `[round][set]`.
pub fn backup_trajectories(
    proto: &dyn Protocol,
    coins: &Coins,
    sets: &[Vec<Party>],
) -> Result<Vec<Vec<bool>>, ProtocolError> {
    check_coins(proto, coins)?;
    let t = honest_transcript(proto, coins);
    let view = coins.view_all();
    Ok((0..=proto.rounds()).map(|i| proto.residual_outputs(sets, &view, t.prefix(i))).collect())
}

/// `B_i^𝕊 = AvgBckp(𝕊, i)` for rounds `0..=r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackupTrajectory {
    pub b: Vec<f64>,
}

impl BackupTrajectory {
    /// Averages `[round][set]` backups over the sets listed in `members`.
    pub fn from_backups(backups: &[Vec<bool>], members: &[usize]) -> Result<Self, ProtocolError> {
        if members.is_empty() {
            return Err(ProtocolError::EmptyTupleSet);
        }
        let b = backups
            .iter()
            .map(|row| members.iter().filter(|&&m| row[m]).count() as f64 / members.len() as f64)
            .collect();
        Ok(Self { b })
    }

    pub fn compute(proto: &dyn Protocol, coins: &Coins, set: &TupleSet) -> Result<Self, ProtocolError> {
        let rows = backup_trajectories(proto, coins, set.tuples())?;
        let idx: Vec<usize> = (0..set.len()).collect();
        Self::from_backups(&rows, &idx)
    }
}

/// `AvgBckp(𝕊, i)` along the honest execution on `coins`.
pub fn avg_backup(proto: &dyn Protocol, coins: &Coins, set: &TupleSet, round: usize) -> Result<f64, ProtocolError> {
    if set.is_empty() {
        return Err(ProtocolError::EmptyTupleSet);
    }
    if round > proto.rounds() {
        return Err(ProtocolError::BadRound { round, rounds: proto.rounds() });
    }
    check_coins(proto, coins)?;
    let t = honest_transcript(proto, coins);
    let outs = proto.residual_outputs(set.tuples(), &coins.view_all(), t.prefix(round));
    Ok(outs.iter().filter(|&&b| b).count() as f64 / outs.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Continue,
    /// Abort every corrupted party outside `keep` before the round's messages.
    AbortBeforeSend { keep: Vec<Party> },
    /// Let everyone send this round, then abort every corrupted party outside `keep`.
    AbortAfterSend { keep: Vec<Party> },
}

/// What a rushing adversary sees in round `t`: rounds `1..t`, the honest
/// round-`t` messages and the corrupted parties' coins.
pub struct AdversaryView<'a> {
    proto: &'a dyn Protocol,
    round: usize,
    prefix: &'a [Round],
    honest: &'a [Party],
    corrupted: &'a [Party],
    honest_round: &'a Round,
    coins: CoinView<'a>,
    current: OnceCell<Round>,
    through_current: OnceCell<Vec<Round>>,
}

impl<'a> AdversaryView<'a> {
    pub fn protocol(&self) -> &'a dyn Protocol {
        self.proto
    }

    /// Current round `t ∈ 1..=r`.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn prefix(&self) -> &'a [Round] {
        self.prefix
    }

    pub fn honest(&self) -> &'a [Party] {
        self.honest
    }

    pub fn corrupted(&self) -> &'a [Party] {
        self.corrupted
    }

    pub fn honest_message(&self, p: Party) -> Option<&'a [u8]> {
        self.honest_round.message(p)
    }

    pub fn corrupted_coins(&self) -> &CoinView<'a> {
        &self.coins
    }

    /// Round `t` as it would be delivered if all corrupted parties send.
    pub fn current_round(&self) -> &Round {
        self.current.get_or_init(|| {
            let mut r = self.honest_round.clone();
            for &p in self.corrupted {
                r.set_message(p, self.proto.next_message(p, self.round, self.coins.party(p), self.prefix));
            }
            r
        })
    }

    /// Residual outputs of `sets` (subsets of the corrupted parties) after
    /// round `through`, which must be `t - 1` or `t`.
    pub fn backups(&self, sets: &[Vec<Party>], through: usize) -> Result<Vec<bool>, ProtocolError> {
        if let Some(p) = sets.iter().flatten().find(|&&p| !self.coins.can_see(p)) {
            return Err(ProtocolError::IllegalDecision(format!("party {p} is not corrupted")));
        }
        if through + 1 == self.round {
            Ok(self.proto.residual_outputs(sets, &self.coins, self.prefix))
        } else if through == self.round {
            let full = self.through_current.get_or_init(|| {
                let mut v = self.prefix.to_vec();
                v.push(self.current_round().clone());
                v
            });
            Ok(self.proto.residual_outputs(sets, &self.coins, full))
        } else {
            Err(ProtocolError::BadRound { round: through, rounds: self.round })
        }
    }
}

/// A fail-stop adversary. It never chooses message contents.
pub trait Adversary {
    fn decide(&mut self, view: &AdversaryView<'_>) -> Decision;
}

/// Never aborts.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullAdversary;

impl Adversary for NullAdversary {
    fn decide(&mut self, _: &AdversaryView<'_>) -> Decision {
        Decision::Continue
    }
}

impl<A: Adversary + ?Sized> Adversary for Box<A> {
    fn decide(&mut self, view: &AdversaryView<'_>) -> Decision {
        (**self).decide(view)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortEvent {
    pub round: usize,
    pub kind: AbortKind,
    pub survivors: Vec<Party>,
}

impl AbortEvent {
    /// The round whose residual value the survivors output.
    pub fn backup_round(&self) -> usize {
        match self.kind {
            AbortKind::BeforeSend => self.round - 1,
            AbortKind::AfterSend => self.round,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    pub transcript: Transcript,
    /// Common output of the honest parties.
    pub honest_out: bool,
    pub abort: Option<AbortEvent>,
}

/// Executes `proto` on `coins` with the complement of `honest` corrupted.
pub fn run_with_adversary(
    proto: &dyn Protocol,
    adversary: &mut dyn Adversary,
    honest: &[Party],
    coins: &Coins,
) -> Result<Execution, ProtocolError> {
    check_coins(proto, coins)?;
    let n = proto.n();
    let mut is_honest = vec![false; n];
    for &h in honest {
        *is_honest.get_mut(h).ok_or(ProtocolError::BadParty(h))? = true;
    }
    let honest: Vec<Party> = (0..n).filter(|&p| is_honest[p]).collect();
    let corrupted: Vec<Party> = (0..n).filter(|&p| !is_honest[p]).collect();
    let mut t = Transcript::new();
    for round in 1..=proto.rounds() {
        let mut hr = Round::empty(n);
        for &p in &honest {
            hr.set_message(p, proto.next_message(p, round, coins.party(p), t.rounds()));
        }
        let decision = {
            let view = AdversaryView {
                proto,
                round,
                prefix: t.rounds(),
                honest: &honest,
                corrupted: &corrupted,
                honest_round: &hr,
                coins: coins.view(&corrupted),
                current: OnceCell::new(),
                through_current: OnceCell::new(),
            };
            adversary.decide(&view)
        };
        let (keep, kind) = match decision {
            Decision::Continue => {
                for &p in &corrupted {
                    hr.set_message(p, proto.next_message(p, round, coins.party(p), t.rounds()));
                }
                t.push(hr);
                continue;
            }
            Decision::AbortBeforeSend { keep } => (keep, AbortKind::BeforeSend),
            Decision::AbortAfterSend { keep } => (keep, AbortKind::AfterSend),
        };
        if let Some(p) = keep.iter().find(|&&p| p >= n || is_honest[p]) {
            return Err(ProtocolError::IllegalDecision(format!("keep contains non-corrupted party {p}")));
        }
        let mut kept = vec![false; n];
        keep.iter().for_each(|&p| kept[p] = true);
        for &p in &corrupted {
            if kind == AbortKind::AfterSend || kept[p] {
                hr.set_message(p, proto.next_message(p, round, coins.party(p), t.rounds()));
            }
            if !kept[p] {
                hr.mark_abort(p, kind);
            }
        }
        t.push(hr);
        let survivors: Vec<Party> = (0..n).filter(|&p| is_honest[p] || kept[p]).collect();
        let event = AbortEvent { round, kind, survivors };
        let out = proto.residual_output(&event.survivors, &coins.view(&event.survivors), t.prefix(event.backup_round()));
        return Ok(Execution { transcript: t, honest_out: out, abort: Some(event) });
    }
    let all: Vec<Party> = (0..n).collect();
    let out = proto.residual_output(&all, &coins.view_all(), t.rounds());
    Ok(Execution { transcript: t, honest_out: out, abort: None })
}
