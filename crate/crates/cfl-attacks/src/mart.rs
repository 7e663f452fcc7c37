// SPDX-License-Identifier: Apache-2.0

//! The game-value attack `MartAttack(𝕊, 𝕊′, z, h)`.
//!
//! The adversary corrupts everyone but `h`, tracks `X̂_i` over the backups of
//! `𝕊` and aborts all corrupted parties except a random tuple of `𝕊′(h)` when
//! a backup moves `1/(64√r)` past the game value in direction `z`.

use cfl_core::seed::StreamRng;
use cfl_protocol::{Adversary, AdversaryView, Decision, Party, ProtocolError, TupleSet};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backups::{count_bits, keep_pool};
use crate::gamevalue::{GameValueTable, XState};
use crate::params::mart_threshold;
use crate::AttackError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartConfig {
    /// Abort threshold; `None` is `1/(64√r)` and `+∞` disables every abort.
    #[serde(default)]
    pub abort_threshold: Option<f64>,
    /// Abort after the round-1 messages in the step-1 test instead of before.
    #[serde(default)]
    pub step1_after_send: bool,
}

impl MartConfig {
    pub fn threshold(&self, r: usize) -> f64 {
        self.abort_threshold.unwrap_or_else(|| mart_threshold(r))
    }

    /// A configuration that never aborts.
    pub fn disabled() -> Self {
        Self { abort_threshold: Some(f64::INFINITY), step1_after_send: false }
    }
}

/// Which test fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MartStep {
    /// `±(B_1 − 1/2)` in round 1.
    Step1,
    /// `±(B_{t−1} − X̂_t)`, aborting before round `t`'s messages.
    Before,
    /// `±(B_t − X̂_t)`, aborting after round `t`'s messages.
    After,
}

/// What the adversary saw in one execution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MartRecord {
    /// `X̂_0..X̂_t` up to the last round the adversary acted in.
    pub x: Vec<f64>,
    /// Decision round `J*`, `r` without an abort.
    pub j_star: usize,
    /// `X̂_{J*}`.
    pub x_at_decision: f64,
    pub step: Option<MartStep>,
}

pub struct MartAttack<'a> {
    table: &'a GameValueTable,
    pool: Vec<Vec<Party>>,
    sign: f64,
    threshold: f64,
    step1_after_send: bool,
    rng: StreamRng,
    state: XState,
    b_prev: u32,
    record: MartRecord,
    error: Option<ProtocolError>,
}

impl<'a> MartAttack<'a> {
    /// `table` must be built for `𝕊`; `h` must lie in no tuple of `𝕊` and in
    /// at least one tuple of `s_prime`.
    pub fn new(
        table: &'a GameValueTable,
        s_prime: &TupleSet,
        z: bool,
        h: Party,
        cfg: &MartConfig,
        rng: StreamRng,
    ) -> Result<Self, AttackError> {
        if table.set().count_with(h) > 0 {
            return Err(AttackError::Config(format!("party {h} lies in a tuple of 𝕊")));
        }
        let pool = keep_pool(s_prime, h);
        if pool.is_empty() {
            return Err(AttackError::Config(format!("𝕊′({h}) is empty")));
        }
        let threshold = cfg.threshold(table.rounds());
        if threshold.is_nan() {
            return Err(AttackError::Config("abort threshold is NaN".into()));
        }
        let x0 = f64::from(table.initial_state().x) / f64::from(table.resolution());
        Ok(Self {
            table,
            pool,
            sign: if z { 1.0 } else { -1.0 },
            threshold,
            step1_after_send: cfg.step1_after_send,
            rng,
            state: table.initial_state(),
            b_prev: 0,
            record: MartRecord { x: vec![x0], j_star: table.rounds(), x_at_decision: x0, step: None },
            error: None,
        })
    }

    pub fn record(&self) -> &MartRecord {
        &self.record
    }

    /// First protocol error met while reading backups.
    pub fn error(&self) -> Option<&ProtocolError> {
        self.error.as_ref()
    }

    fn keep(&mut self) -> Vec<Party> {
        self.pool[self.rng.random_range(0..self.pool.len())].clone()
    }

    fn count(&mut self, view: &AdversaryView<'_>, through: usize) -> Option<u32> {
        match view.backups(self.table.set().tuples(), through) {
            Ok(b) => Some(count_bits(&b)),
            Err(e) => {
                self.error.get_or_insert(e);
                None
            }
        }
    }
}

impl Adversary for MartAttack<'_> {
    fn decide(&mut self, view: &AdversaryView<'_>) -> Decision {
        let t = view.round();
        if self.error.is_some() || t > self.table.rounds() {
            return Decision::Continue;
        }
        let b_prev = if t == 1 {
            match self.count(view, 0) {
                Some(c) => c,
                None => return Decision::Continue,
            }
        } else {
            self.b_prev
        };
        let Some(b) = self.count(view, t) else { return Decision::Continue };
        self.b_prev = b;
        let old = self.state;
        self.state = self.table.step(t, b, b_prev, old).0;
        let size = self.table.set().len() as f64;
        let x = f64::from(self.state.x) / f64::from(self.table.resolution());
        let (bt, bp) = (f64::from(b) / size, f64::from(b_prev) / size);
        self.record.x.push(x);
        self.record.x_at_decision = x;
        self.record.j_star = t;

        let step = if t == 1 {
            (self.sign * (bt - 0.5) > self.threshold).then_some(MartStep::Step1)
        } else if !old.g {
            None
        } else if self.sign * (bp - x) > self.threshold {
            Some(MartStep::Before)
        } else if self.sign * (bt - x) > self.threshold {
            Some(MartStep::After)
        } else {
            None
        };
        self.record.step = step;
        match step {
            None => Decision::Continue,
            Some(MartStep::Step1) if self.step1_after_send => Decision::AbortAfterSend { keep: self.keep() },
            Some(MartStep::Step1 | MartStep::Before) => Decision::AbortBeforeSend { keep: self.keep() },
            Some(MartStep::After) => Decision::AbortAfterSend { keep: self.keep() },
        }
    }
}
