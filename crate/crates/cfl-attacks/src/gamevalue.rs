// SPDX-License-Identifier: Apache-2.0

//! The sampled game-value sequence `X̂`.
//!
//! [`build_x`] constructs the per-round maps `μ_i` from contexts
//! `(b, b′, x, σ, τ)` to the `δ`-grid, `δ = 1/(200r)`, by counting honest
//! executions; [`eval_x`] folds the maps over a backup trajectory. Contexts are
//! keyed by grid indices: backups by their count of 1-outputs among the tuples
//! of `𝕊`, game values by multiples of `δ`, sums of squares by multiples of `δ²`.

use std::collections::HashMap;

use cfl_core::SeedStream;
use cfl_protocol::protocols::{enumerate_coins, MAX_ENUMERATION_BITS};
use cfl_protocol::{BackupTrajectory, Coins, Protocol, TupleSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backups::SetBackups;
use crate::params::mart_threshold;
use crate::trigger::trigger_g_with;
use crate::AttackError;

/// Conditioning context of `μ_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Context {
    /// Count of 1-backups at round `i`.
    pub b: u32,
    /// Count of 1-backups at round `i − 1`.
    pub b_prev: u32,
    /// `X̂_{i−1}` in units of `δ`.
    pub x: u32,
    /// `Σ_{j<i} (X̂_j − X̂_{j−1})²` in units of `δ²`.
    pub sos: u64,
    /// `Ĝ_{i−1}`.
    pub tau: bool,
}

/// Counts behind one entry of `μ_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    /// Executions in the context with output 1.
    pub p: u64,
    /// Executions in the context.
    pub q: u64,
    /// `μ_i` in units of `δ`: `⌊(p/q)/δ⌋`.
    pub mu: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BuildMode {
    /// Exact when the coin space has at most 2^20 points, sampled otherwise.
    #[default]
    Auto,
    Sampled,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildXConfig {
    /// Executions per round in sampled mode.
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub mode: BuildMode,
    /// Draw a fresh batch of executions for every round; otherwise one batch is
    /// reused for all rounds.
    #[serde(default = "default_true")]
    pub fresh_per_round: bool,
}

fn default_budget() -> u64 {
    100_000
}

fn default_true() -> bool {
    true
}

impl Default for BuildXConfig {
    fn default() -> Self {
        Self { budget: default_budget(), mode: BuildMode::Auto, fresh_per_round: true }
    }
}

/// Running state `(X̂_i, Σ squares, Ĝ_i)` of the fold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct XState {
    pub x: u32,
    pub sos: u64,
    pub g: bool,
}

/// The maps `μ_1..μ_r` for one tuple set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "TableArtifact", try_from = "TableArtifact")]
pub struct GameValueTable {
    r: usize,
    set: TupleSet,
    resolution: u32,
    threshold: f64,
    budget: u64,
    exact: bool,
    rounds: Vec<HashMap<Context, Cell>>,
}

impl GameValueTable {
    fn empty(r: usize, set: TupleSet, budget: u64, exact: bool) -> Self {
        Self {
            r,
            set,
            resolution: 200 * r as u32,
            threshold: mart_threshold(r),
            budget,
            exact,
            rounds: vec![HashMap::new(); r + 1],
        }
    }

    /// A table with no observed context, so `X̂ ≡ 1/2` on every trajectory.
    pub fn neutral(r: usize, set: TupleSet) -> Self {
        Self::empty(r, set, 0, false)
    }

    pub fn rounds(&self) -> usize {
        self.r
    }

    pub fn set(&self) -> &TupleSet {
        &self.set
    }

    /// `1/δ = 200r`.
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn delta(&self) -> f64 {
        1.0 / f64::from(self.resolution)
    }

    /// Trigger threshold used by the latch.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Executions per round (sampled) or coin-space size (exact).
    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn cell(&self, round: usize, ctx: &Context) -> Option<&Cell> {
        self.rounds.get(round)?.get(ctx)
    }

    /// Observed contexts of `μ_round`, sorted.
    pub fn contexts(&self, round: usize) -> Vec<(Context, Cell)> {
        let mut v: Vec<(Context, Cell)> = self.rounds[round].iter().map(|(c, v)| (*c, *v)).collect();
        v.sort_by_key(|e| e.0);
        v
    }

    pub fn initial_state(&self) -> XState {
        XState { x: self.resolution / 2, sos: 0, g: true }
    }

    /// One fold step at round `i`: returns the new state and whether the
    /// context was observed. Unseen contexts keep `X̂_{i−1}`.
    pub fn step(&self, round: usize, b: u32, b_prev: u32, st: XState) -> (XState, bool) {
        let ctx = Context { b, b_prev, x: st.x, sos: st.sos, tau: st.g };
        let (x, seen) = match self.rounds[round].get(&ctx) {
            Some(cell) => (cell.mu, true),
            None => (st.x, false),
        };
        let d = i64::from(x) - i64::from(st.x);
        let m = f64::from(self.resolution);
        let s = self.set.len() as f64;
        let g = trigger_g_with(self.threshold, f64::from(x) / m, f64::from(b) / s, f64::from(b_prev) / s, st.g);
        (XState { x, sos: st.sos + (d * d) as u64, g }, seen)
    }

    /// Serialises the table as JSON.
    pub fn to_json(&self) -> Result<String, AttackError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, AttackError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// JSON form of [`GameValueTable`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableArtifact {
    r: usize,
    set: TupleSet,
    resolution: u32,
    threshold: f64,
    budget: u64,
    exact: bool,
    rounds: Vec<Vec<TableEntry>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    #[serde(flatten)]
    ctx: Context,
    #[serde(flatten)]
    cell: Cell,
}

impl From<GameValueTable> for TableArtifact {
    fn from(t: GameValueTable) -> Self {
        let rounds = (0..=t.r)
            .map(|i| t.contexts(i).into_iter().map(|(ctx, cell)| TableEntry { ctx, cell }).collect())
            .collect();
        Self { r: t.r, set: t.set, resolution: t.resolution, threshold: t.threshold, budget: t.budget, exact: t.exact, rounds }
    }
}

impl TryFrom<TableArtifact> for GameValueTable {
    type Error = String;

    fn try_from(a: TableArtifact) -> Result<Self, String> {
        if a.rounds.len() != a.r + 1 || a.resolution != 200 * a.r as u32 {
            return Err(format!("inconsistent table shape for r = {}", a.r));
        }
        let rounds = a.rounds.into_iter().map(|es| es.into_iter().map(|e| (e.ctx, e.cell)).collect()).collect();
        Ok(Self {
            r: a.r,
            set: a.set,
            resolution: a.resolution,
            threshold: a.threshold,
            budget: a.budget,
            exact: a.exact,
            rounds,
        })
    }
}

/// The fold of a table over one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XTrace {
    /// `X̂_0..X̂_r`.
    pub x: Vec<f64>,
    /// `Ĝ_0..Ĝ_r`.
    pub g: Vec<bool>,
    /// Running sums of squares, `sos[i] = Σ_{j≤i} (X̂_j − X̂_{j−1})²`.
    pub sos: Vec<f64>,
    /// `unseen[i]`: the round-`i` context was not in the table.
    pub unseen: Vec<bool>,
}

impl XTrace {
    /// Largest `|X̂_i − X̂_{i−1}|`.
    pub fn max_jump(&self) -> f64 {
        self.x.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }
}

/// Folds `table` over backup counts `b[0..=r]` of the table's tuple set.
pub fn eval_counts(table: &GameValueTable, counts: &[u32]) -> Result<XTrace, AttackError> {
    let r = table.rounds();
    if counts.len() != r + 1 {
        return Err(AttackError::Table(format!("trajectory has {} points, expected {}", counts.len(), r + 1)));
    }
    if let Some(&c) = counts.iter().find(|&&c| c as usize > table.set().len()) {
        return Err(AttackError::Table(format!("backup count {c} exceeds |𝕊| = {}", table.set().len())));
    }
    let m = f64::from(table.resolution());
    let mut st = table.initial_state();
    let mut tr = XTrace { x: vec![f64::from(st.x) / m], g: vec![true], sos: vec![0.0], unseen: vec![false] };
    for i in 1..=r {
        let (next, seen) = table.step(i, counts[i], counts[i - 1], st);
        st = next;
        tr.x.push(f64::from(st.x) / m);
        tr.g.push(st.g);
        tr.sos.push(st.sos as f64 / (m * m));
        tr.unseen.push(!seen);
    }
    Ok(tr)
}

/// Folds `table` over a trajectory `B_0..B_r` of the table's tuple set.
pub fn eval_x(table: &GameValueTable, traj: &BackupTrajectory) -> Result<XTrace, AttackError> {
    let s = table.set().len() as f64;
    let counts = traj
        .b
        .iter()
        .map(|&b| {
            let c = (b * s).round();
            if (c - b * s).abs() > 1e-6 || c < 0.0 {
                Err(AttackError::Table(format!("backup average {b} is not a multiple of 1/{s}")))
            } else {
                Ok(c as u32)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    eval_counts(table, &counts)
}

/// Builds `μ_1..μ_r` for tuple set `set`.
///
/// Round `i` replays every execution through `μ_{<i}` to reach its context
/// and sets `μ_i(c) = ⌊(p_c/q_c)/δ⌋·δ` for every observed context `c`.
pub fn build_x(
    proto: &dyn Protocol,
    set: &TupleSet,
    cfg: &BuildXConfig,
    stream: &SeedStream,
) -> Result<GameValueTable, AttackError> {
    if set.is_empty() {
        return Err(AttackError::Config("build_x needs a non-empty tuple set".into()));
    }
    if let Some(&p) = set.base().iter().find(|&&p| p >= proto.n()) {
        return Err(AttackError::Config(format!("tuple set mentions party {p} outside [n]")));
    }
    let bits = proto.coin_bits();
    let exact = match cfg.mode {
        BuildMode::Exact if bits > MAX_ENUMERATION_BITS => {
            return Err(AttackError::CoinSpaceTooLarge { bits, limit: MAX_ENUMERATION_BITS })
        }
        BuildMode::Exact => true,
        BuildMode::Auto => bits <= MAX_ENUMERATION_BITS,
        BuildMode::Sampled => false,
    };
    if !exact && cfg.budget == 0 {
        return Err(AttackError::Config("build_x budget must be at least 1".into()));
    }
    let r = proto.rounds();
    let trajectories = |coins: Vec<Coins>| -> Result<Vec<(Vec<u32>, bool)>, AttackError> {
        coins
            .into_par_iter()
            .map(|c| SetBackups::compute(proto, &c, &[set]).map(|sb| (sb.counts[0].clone(), sb.out)))
            .collect()
    };
    let sample = |batch: u64| -> Vec<Coins> {
        let s = stream.child(batch);
        (0..cfg.budget).map(|l| Coins::sample(proto.n(), proto.coin_len(), &mut s.child(l).rng())).collect()
    };
    if exact {
        let all = trajectories(enumerate_coins(proto)?.collect())?;
        let budget = all.len() as u64;
        let mut table = GameValueTable::empty(r, set.clone(), budget, true);
        fill_shared(&mut table, &all);
        return Ok(table);
    }
    let mut table = GameValueTable::empty(r, set.clone(), cfg.budget, false);
    if cfg.fresh_per_round {
        for i in 1..=r {
            let batch = trajectories(sample(i as u64))?;
            let mut counts: HashMap<Context, (u64, u64)> = HashMap::new();
            for (b, out) in &batch {
                let mut st = table.initial_state();
                for j in 1..i {
                    st = table.step(j, b[j], b[j - 1], st).0;
                }
                tally(&mut counts, Context { b: b[i], b_prev: b[i - 1], x: st.x, sos: st.sos, tau: st.g }, *out);
            }
            table.rounds[i] = finish(counts, table.resolution);
        }
    } else {
        let batch = trajectories(sample(0))?;
        fill_shared(&mut table, &batch);
    }
    Ok(table)
}

fn tally(counts: &mut HashMap<Context, (u64, u64)>, ctx: Context, out: bool) {
    let e = counts.entry(ctx).or_insert((0, 0));
    e.0 += u64::from(out);
    e.1 += 1;
}

fn finish(counts: HashMap<Context, (u64, u64)>, resolution: u32) -> HashMap<Context, Cell> {
    counts
        .into_iter()
        .map(|(ctx, (p, q))| (ctx, Cell { p, q, mu: (p * u64::from(resolution) / q) as u32 }))
        .collect()
}

/// Builds every round from one batch, advancing each execution's state as the
/// rounds are filled in.
fn fill_shared(table: &mut GameValueTable, batch: &[(Vec<u32>, bool)]) {
    let mut states = vec![table.initial_state(); batch.len()];
    for i in 1..=table.r {
        let mut counts: HashMap<Context, (u64, u64)> = HashMap::new();
        for ((b, out), st) in batch.iter().zip(&states) {
            tally(&mut counts, Context { b: b[i], b_prev: b[i - 1], x: st.x, sos: st.sos, tau: st.g }, *out);
        }
        table.rounds[i] = finish(counts, table.resolution);
        for ((b, _), st) in batch.iter().zip(states.iter_mut()) {
            *st = table.step(i, b[i], b[i - 1], *st).0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cfl_protocol::protocols::{ConstantProtocol, MajorityCoin, ScriptedProtocol};

    fn singletons(parties: &[usize]) -> TupleSet {
        TupleSet::choose_all(parties, 1)
    }

    #[test]
    fn rounding_example() {
        let cells = finish([(Context { b: 0, b_prev: 0, x: 100, sos: 0, tau: true }, (3, 5))].into(), 200);
        let cell = cells.values().next().unwrap();
        assert_eq!(cell.mu, 120);
        assert_eq!(f64::from(cell.mu) / 200.0, 0.6);
    }

    #[test]
    fn neutral_table_is_flat() {
        let t = GameValueTable::neutral(3, singletons(&[0, 1]));
        let tr = eval_counts(&t, &[1, 2, 0, 2]).unwrap();
        assert!(tr.x.iter().all(|&x| x == 0.5));
        assert!(tr.sos.iter().all(|&s| s == 0.0));
        assert!(tr.unseen[1..].iter().all(|&u| u));
    }

    #[test]
    fn independent_output_gives_global_mean() {
        // Output is party 2's round-2 bit, unrevealed through round 1.
        let p = ScriptedProtocol::from_fn(3, 2, 1, |c| c.party(2)[1]).unwrap();
        let t = build_x(&p, &singletons(&[0, 1]), &BuildXConfig::default(), &SeedStream::new(1)).unwrap();
        assert!(t.is_exact());
        assert!(!t.contexts(1).is_empty());
        for (_, cell) in t.contexts(1) {
            assert_eq!(2 * cell.p, cell.q);
            assert_eq!(cell.mu, t.resolution() / 2);
        }
        let c = ConstantProtocol::new(3, 2, true).unwrap();
        let t = build_x(&c, &singletons(&[0, 1]), &BuildXConfig::default(), &SeedStream::new(1)).unwrap();
        for i in 1..=2 {
            assert!(t.contexts(i).iter().all(|(_, cell)| cell.mu == t.resolution()));
        }
    }

    #[test]
    fn exact_mode_matches_conditional_expectations() {
        let m = MajorityCoin::new(3, 3).unwrap();
        let set = singletons(&[0, 1]);
        let t = build_x(&m, &set, &BuildXConfig { mode: BuildMode::Exact, ..Default::default() }, &SeedStream::new(0))
            .unwrap();
        assert_eq!(t.budget(), 512);
        let total: u64 = t.contexts(1).iter().map(|(_, c)| c.q).sum();
        assert_eq!(total, 512);
        for i in 1..=3 {
            for (_, cell) in t.contexts(i) {
                let e = cell.p as f64 / cell.q as f64;
                let mu = f64::from(cell.mu) * t.delta();
                assert!(mu <= e + 1e-12 && e - mu < t.delta());
            }
        }
    }

    #[test]
    fn exact_table_last_round_is_output() {
        // After round r every singleton backup equals the output.
        let m = MajorityCoin::new(3, 3).unwrap();
        let set = singletons(&[0, 1]);
        let t = build_x(&m, &set, &BuildXConfig::default(), &SeedStream::new(0)).unwrap();
        for (ctx, cell) in t.contexts(3) {
            assert!(cell.p == 0 || cell.p == cell.q);
            assert_eq!(cell.p > 0, ctx.b == 2);
        }
    }

    #[test]
    fn sampled_matches_exact_roughly_and_is_deterministic() {
        let m = MajorityCoin::new(3, 3).unwrap();
        let set = singletons(&[0, 1]);
        let cfg = BuildXConfig { budget: 4000, mode: BuildMode::Sampled, fresh_per_round: true };
        let a = build_x(&m, &set, &cfg, &SeedStream::new(5)).unwrap();
        let b = build_x(&m, &set, &cfg, &SeedStream::new(5)).unwrap();
        assert_eq!(a, b);
        let shared = BuildXConfig { fresh_per_round: false, ..cfg };
        let c = build_x(&m, &set, &shared, &SeedStream::new(5)).unwrap();
        assert_eq!(c.contexts(1).iter().map(|(_, x)| x.q).sum::<u64>(), 4000);
    }

    #[test]
    fn json_round_trip() {
        let m = MajorityCoin::new(3, 3).unwrap();
        let t = build_x(&m, &singletons(&[0, 1]), &BuildXConfig::default(), &SeedStream::new(0)).unwrap();
        let back = GameValueTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn trace_invariants_on_exact_table() {
        let m = MajorityCoin::new(3, 3).unwrap();
        let set = singletons(&[0, 1]);
        let t = build_x(&m, &set, &BuildXConfig::default(), &SeedStream::new(0)).unwrap();
        for coins in enumerate_coins(&m).unwrap().step_by(7) {
            let traj = BackupTrajectory::compute(&m, &coins, &set).unwrap();
            let tr = eval_x(&t, &traj).unwrap();
            assert_eq!(tr.x[0], 0.5);
            assert!(tr.g[0]);
            for i in 1..=3 {
                assert!(!tr.g[i] || tr.g[i - 1], "latch reopened");
                let k = tr.x[i] * 600.0;
                assert!((k - k.round()).abs() < 1e-9);
                let s = tr.sos[i] * 360_000.0;
                assert!((s - s.round()).abs() < 1e-6);
                assert!(!tr.unseen[i]);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = MajorityCoin::new(3, 3).unwrap();
        assert!(build_x(&m, &TupleSet::empty(1), &BuildXConfig::default(), &SeedStream::new(0)).is_err());
        let big = MajorityCoin::new(8, 3).unwrap();
        let cfg = BuildXConfig { mode: BuildMode::Exact, ..Default::default() };
        assert!(matches!(
            build_x(&big, &singletons(&[0]), &cfg, &SeedStream::new(0)),
            Err(AttackError::CoinSpaceTooLarge { .. })
        ));
        let t = GameValueTable::neutral(3, singletons(&[0, 1]));
        assert!(eval_counts(&t, &[0, 1]).is_err());
        assert!(eval_counts(&t, &[0, 1, 3, 0]).is_err());
    }
}
