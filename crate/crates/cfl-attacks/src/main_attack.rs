// SPDX-License-Identifier: Apache-2.0

//! The end-to-end attack: choose `k`, find a nugget, dispatch to the matching
//! adversary, select a direction, honest party and target bit on pilot runs,
//! then measure the bias on fresh executions.

use std::collections::HashMap;

use cfl_core::seed::StreamRng;
use cfl_core::stats::{Proportion, Z95};
use cfl_core::SeedStream;
use cfl_protocol::protocols::MAX_ENUMERATION_BITS;
use cfl_protocol::{run_honest, run_with_adversary, AbortKind, Coins, Execution, NullAdversary, Party, Protocol};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ci93::{Ci93Attack, Ci93Oracle};
use crate::dp::DpAttack;
use crate::gamevalue::{build_x, BuildXConfig, GameValueTable};
use crate::mart::{MartAttack, MartConfig};
use crate::nugget::{nugget_finder, NuggetConfig, NuggetResult};
use crate::params::{dp_bias_bound, dp_gamma, mart_bias_bound, sing_alpha, sing_bias_bound};
use crate::sing::SingAttack;
use crate::AttackError;

/// Which adversary to run; `Auto` dispatches on the nugget.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    #[default]
    Auto,
    Mart,
    Dp,
    Sing,
    Ci93,
    Null,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    Mart,
    Dp,
    Sing,
    Ci93,
    Null,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    #[serde(default)]
    pub route: Route,
    #[serde(default)]
    pub nugget: NuggetConfig,
    #[serde(default)]
    pub build_x: BuildXConfig,
    #[serde(default)]
    pub mart: MartConfig,
    /// Try both placements of the round-1 abort of the game-value attack.
    #[serde(default = "default_true")]
    pub sweep_step1: bool,
    /// Overrides the dispatched `γ` of the Laplace and singletons attacks.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Executions per candidate in the selection sweep.
    #[serde(default = "default_pilot")]
    pub pilot_trials: u64,
    /// Executions of the selected candidate.
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Honest parties tried, sampled from `H`.
    #[serde(default = "default_max_parties")]
    pub max_parties: usize,
    /// Disable every trigger; the run must reproduce the honest executions.
    #[serde(default)]
    pub disable_triggers: bool,
}

fn default_true() -> bool {
    true
}

fn default_pilot() -> u64 {
    2000
}

fn default_trials() -> u64 {
    10_000
}

fn default_max_parties() -> usize {
    4
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            route: Route::Auto,
            nugget: NuggetConfig::default(),
            build_x: BuildXConfig::default(),
            mart: MartConfig::default(),
            sweep_step1: true,
            gamma: None,
            pilot_trials: default_pilot(),
            trials: default_trials(),
            max_parties: default_max_parties(),
            disable_triggers: false,
        }
    }
}

/// One adversary of the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub kind: AdversaryKind,
    pub z: bool,
    pub h: Party,
    /// Game-value attack only: round-1 abort after sending.
    pub step1_after_send: bool,
}

/// Pilot outcome of one candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotEntry {
    pub candidate: Candidate,
    pub ones: Proportion,
}

/// One execution of the selected adversary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackTrial {
    pub trial: u64,
    pub seed_path: Vec<u64>,
    pub h: Party,
    pub kind: AdversaryKind,
    pub z: bool,
    pub abort_round: Option<usize>,
    pub abort_kind: Option<AbortKind>,
    pub backup_round: Option<usize>,
    /// Output of `h` under attack.
    pub out: bool,
    /// Output of the honest execution on the same coins.
    pub honest_out: bool,
    /// Game-value attack: `J*` and `X̂_{J*}`.
    pub j_star: Option<usize>,
    pub x_at_decision: Option<f64>,
}

/// Result of re-running every confirmation execution with triggers disabled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub trials: u64,
    /// Executions whose output differs from the honest one or that aborted.
    pub mismatches: u64,
}

impl CouplingReport {
    pub fn holds(&self) -> bool {
        self.mismatches == 0
    }
}

/// An estimate with its standard error and 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub ci: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub kind: AdversaryKind,
    pub route: Route,
    pub k: Option<usize>,
    pub nugget: Option<NuggetResult>,
    pub selected: Candidate,
    /// Bit the selected adversary pushes the output towards.
    pub target: bool,
    pub trials: u64,
    /// Executions with output equal to `target`.
    pub hits: Proportion,
    /// `p̂(target) − 1/2`, interval from the Wilson interval of `p̂`.
    pub bias: Estimate,
    /// Mean of `1[out = target] − 1[honest out = target]` on shared coins.
    pub paired_shift: Estimate,
    /// `abort_rounds[t]`: executions aborted in round `t`; index 0 counts
    /// executions without an abort.
    pub abort_rounds: Vec<u64>,
    /// Number of (candidate, target) pairs the selection chose from.
    pub multiplicity: usize,
    /// Bias guaranteed for the dispatched adversary, when one applies.
    pub bound: Option<f64>,
    pub gamma: Option<f64>,
    pub sweep: Vec<PilotEntry>,
    pub coupling: CouplingReport,
    pub records: Vec<AttackTrial>,
}

struct Context<'a> {
    proto: &'a dyn Protocol,
    cfg: &'a AttackConfig,
    nugget: Option<&'a NuggetResult>,
    table: Option<GameValueTable>,
    oracles: HashMap<Party, Ci93Oracle>,
    gamma: f64,
}

struct Outcome {
    ex: Execution,
    j_star: Option<usize>,
    x_at_decision: Option<f64>,
}

impl Context<'_> {
    fn run(&self, c: &Candidate, coins: &Coins, mut rng: StreamRng, disabled: bool) -> Result<Outcome, AttackError> {
        let honest = [c.h];
        let proto = self.proto;
        let nug = || self.nugget.ok_or_else(|| AttackError::Config("route needs a nugget".into()));
        let gamma = if disabled { f64::INFINITY } else { self.gamma };
        let plain = |ex| Outcome { ex, j_star: None, x_at_decision: None };
        Ok(match c.kind {
            AdversaryKind::Mart => {
                let table = self.table.as_ref().ok_or_else(|| AttackError::Config("missing game-value table".into()))?;
                let mcfg = if disabled {
                    MartConfig::disabled()
                } else {
                    MartConfig { abort_threshold: self.cfg.mart.abort_threshold, step1_after_send: c.step1_after_send }
                };
                let mut a = MartAttack::new(table, &nug()?.s0, c.z, c.h, &mcfg, rng)?;
                let ex = run_with_adversary(proto, &mut a, &honest, coins)?;
                if let Some(e) = a.error() {
                    return Err(e.clone().into());
                }
                Outcome { ex, j_star: Some(a.record().j_star), x_at_decision: Some(a.record().x_at_decision) }
            }
            AdversaryKind::Dp => {
                let n = nug()?;
                let mut a = DpAttack::new(&n.s1, &n.s0, c.z, c.h, gamma, proto.rounds(), rng)?;
                let ex = run_with_adversary(proto, &mut a, &honest, coins)?;
                if let Some(e) = a.error() {
                    return Err(e.clone().into());
                }
                plain(ex)
            }
            AdversaryKind::Sing => {
                let n = nug()?;
                let mut a = SingAttack::new(&n.s1, &n.s0, c.z, c.h, gamma, &mut rng)?;
                let ex = run_with_adversary(proto, &mut a, &honest, coins)?;
                if let Some(e) = a.error() {
                    return Err(e.clone().into());
                }
                plain(ex)
            }
            AdversaryKind::Ci93 => {
                let oracle = self.oracles.get(&c.h).ok_or_else(|| AttackError::Config(format!("no oracle for party {}", c.h)))?;
                let mut a = if disabled {
                    Ci93Attack::with_threshold(oracle, c.z, f64::INFINITY)
                } else {
                    Ci93Attack::new(oracle, c.z)
                };
                plain(run_with_adversary(proto, &mut a, &honest, coins)?)
            }
            AdversaryKind::Null => plain(run_with_adversary(proto, &mut NullAdversary, &honest, coins)?),
        })
    }
}

fn coins_for(proto: &dyn Protocol, s: &SeedStream) -> Coins {
    Coins::sample(proto.n(), proto.coin_len(), &mut s.child(0).rng())
}

fn proportion_estimate(p: Proportion) -> Estimate {
    let v = p.estimate().unwrap_or(0.5);
    let (lo, hi) = p.wilson(Z95).unwrap_or((0.0, 1.0));
    Estimate { value: v - 0.5, se: p.se().unwrap_or(f64::NAN), ci: (lo - 0.5, hi - 0.5) }
}

fn mean_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return Estimate { value: 0.0, se: f64::NAN, ci: (f64::NAN, f64::NAN) };
    }
    let m = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let se = (var / n).sqrt();
    Estimate { value: m, se, ci: (m - Z95 * se, m + Z95 * se) }
}

/// Honest parties to try: up to `max` sampled from `pool`, in increasing order.
fn pick_parties(pool: &[Party], max: usize, stream: &SeedStream) -> Vec<Party> {
    if pool.len() <= max {
        return pool.to_vec();
    }
    let mut idx = sample(&mut stream.rng(), pool.len(), max).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| pool[i]).collect()
}

/// Runs the attack on `proto`.
pub fn main_attack(proto: &dyn Protocol, cfg: &AttackConfig, stream: &SeedStream) -> Result<AttackResult, AttackError> {
    if cfg.max_parties == 0 {
        return Err(AttackError::Config("max_parties must be at least 1".into()));
    }
    let (n, r) = (proto.n(), proto.rounds());
    let enumerable = proto.coin_bits() <= MAX_ENUMERATION_BITS;
    let needs_nugget = match cfg.route {
        Route::Auto => r >= 2,
        Route::Mart | Route::Dp | Route::Sing => true,
        Route::Ci93 | Route::Null => false,
    };
    let nugget = if needs_nugget { Some(nugget_finder(proto, &cfg.nugget, &stream.child(0))?) } else { None };
    let k = nugget.as_ref().map(|nu| nu.k);
    let kind = match cfg.route {
        Route::Auto => match &nugget {
            Some(nu) if nu.k_star == nu.k + 1 => AdversaryKind::Mart,
            Some(nu) if nu.k_star >= 2 => AdversaryKind::Dp,
            Some(_) => AdversaryKind::Sing,
            None if enumerable => AdversaryKind::Ci93,
            None => {
                return Err(AttackError::Config(format!(
                    "r = {r} admits no nugget and the coin space is too large for the exact attack"
                )))
            }
        },
        Route::Mart => AdversaryKind::Mart,
        Route::Dp => AdversaryKind::Dp,
        Route::Sing => AdversaryKind::Sing,
        Route::Ci93 => AdversaryKind::Ci93,
        Route::Null => AdversaryKind::Null,
    };
    let (gamma, bound) = match (kind, &nugget) {
        (AdversaryKind::Dp, Some(nu)) => (
            cfg.gamma.unwrap_or_else(|| dp_gamma(n, nu.k, nu.k_star.clamp(1, nu.k), r, nu.rho_star)),
            Some(dp_bias_bound(nu.k, nu.k_star.clamp(1, nu.k), r)),
        ),
        (AdversaryKind::Sing, Some(nu)) => (
            cfg.gamma.unwrap_or_else(|| sing_alpha(n, nu.k, r, nu.rho_star) / (n as f64).sqrt()),
            Some(sing_bias_bound(nu.k, r)),
        ),
        (AdversaryKind::Mart, _) => (f64::NAN, Some(mart_bias_bound(r))),
        _ => (f64::NAN, None),
    };

    let pool: Vec<Party> = match (&nugget, kind) {
        (_, AdversaryKind::Null) => vec![0],
        (Some(nu), AdversaryKind::Mart | AdversaryKind::Dp | AdversaryKind::Sing) => nu.h.clone(),
        _ => (0..n).collect(),
    };
    if pool.is_empty() {
        return Err(AttackError::Config("the nugget has an empty party set H".into()));
    }
    let parties = pick_parties(&pool, cfg.max_parties, &stream.child(1));

    let table = if kind == AdversaryKind::Mart {
        let nu = nugget.as_ref().ok_or_else(|| AttackError::Config("route needs a nugget".into()))?;
        Some(build_x(proto, &nu.s1, &cfg.build_x, &stream.child(2))?)
    } else {
        None
    };
    let oracles = if kind == AdversaryKind::Ci93 {
        parties.iter().map(|&h| Ci93Oracle::build(proto, h).map(|o| (h, o))).collect::<Result<_, _>>()?
    } else {
        HashMap::new()
    };
    let ctx = Context { proto, cfg, nugget: nugget.as_ref(), table, oracles, gamma };

    let variants: &[bool] = if kind == AdversaryKind::Mart && cfg.sweep_step1 {
        &[false, true]
    } else if kind == AdversaryKind::Mart {
        std::slice::from_ref(&cfg.mart.step1_after_send)
    } else {
        &[false]
    };
    let dirs: &[bool] = if kind == AdversaryKind::Null { &[true] } else { &[true, false] };
    let mut candidates = Vec::new();
    for &z in dirs {
        for &h in &parties {
            for &v in variants {
                candidates.push(Candidate { kind, z, h, step1_after_send: v });
            }
        }
    }

    let pilot = stream.child(3);
    let sweep: Vec<PilotEntry> = candidates
        .iter()
        .map(|c| {
            let outs = (0..cfg.pilot_trials)
                .into_par_iter()
                .map(|i| {
                    let s = pilot.child(i);
                    ctx.run(c, &coins_for(proto, &s), s.child(1).rng(), cfg.disable_triggers).map(|o| o.ex.honest_out)
                })
                .collect::<Result<Vec<bool>, _>>()?;
            Ok(PilotEntry { candidate: *c, ones: Proportion::new(outs.iter().filter(|&&b| b).count() as u64, cfg.pilot_trials) })
        })
        .collect::<Result<_, AttackError>>()?;
    let mut best = (0usize, true, f64::NEG_INFINITY);
    for (i, e) in sweep.iter().enumerate() {
        let p1 = e.ones.estimate().unwrap_or(0.5);
        for (target, b) in [(true, p1 - 0.5), (false, 0.5 - p1)] {
            if b > best.2 {
                best = (i, target, b);
            }
        }
    }
    let (sel, target) = (candidates[best.0], best.1);

    let confirm = stream.child(4);
    let disabled = cfg.disable_triggers;
    let records: Vec<AttackTrial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let s = confirm.child(i);
            let coins = coins_for(proto, &s);
            let o = ctx.run(&sel, &coins, s.child(1).rng(), disabled)?;
            let honest_out = run_honest(proto, &coins)?.1;
            Ok(AttackTrial {
                trial: i,
                seed_path: s.path().to_vec(),
                h: sel.h,
                kind,
                z: sel.z,
                abort_round: o.ex.abort.as_ref().map(|a| a.round),
                abort_kind: o.ex.abort.as_ref().map(|a| a.kind),
                backup_round: o.ex.abort.as_ref().map(|a| a.backup_round()),
                out: o.ex.honest_out,
                honest_out,
                j_star: o.j_star,
                x_at_decision: o.x_at_decision,
            })
        })
        .collect::<Result<_, AttackError>>()?;
    let mismatches = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let s = confirm.child(i);
            let coins = coins_for(proto, &s);
            let o = ctx.run(&sel, &coins, s.child(1).rng(), true)?;
            Ok(u64::from(o.ex.abort.is_some() || o.ex.honest_out != records[i as usize].honest_out))
        })
        .collect::<Result<Vec<u64>, AttackError>>()?
        .into_iter()
        .sum();

    let hits = Proportion::new(records.iter().filter(|t| t.out == target).count() as u64, cfg.trials);
    let shifts: Vec<f64> =
        records.iter().map(|t| f64::from(u8::from(t.out == target)) - f64::from(u8::from(t.honest_out == target))).collect();
    let mut abort_rounds = vec![0u64; r + 1];
    for t in &records {
        abort_rounds[t.abort_round.unwrap_or(0)] += 1;
    }
    Ok(AttackResult {
        kind,
        route: cfg.route,
        k,
        nugget,
        selected: sel,
        target,
        trials: cfg.trials,
        hits,
        bias: proportion_estimate(hits),
        paired_shift: mean_estimate(&shifts),
        abort_rounds,
        multiplicity: 2 * candidates.len(),
        bound,
        gamma: gamma.is_finite().then_some(gamma),
        sweep,
        coupling: CouplingReport { trials: cfg.trials, mismatches },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cfl_protocol::protocols::{ConstantProtocol, MajorityCoin, ParityProtocol};
    use std::sync::Arc;

    fn small(route: Route) -> AttackConfig {
        AttackConfig {
            route,
            pilot_trials: 200,
            trials: 400,
            max_parties: 2,
            nugget: NuggetConfig { budget: 100, ..Default::default() },
            build_x: BuildXConfig { budget: 2000, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn constant_protocol_is_not_shifted() {
        let c = ConstantProtocol::new(9, 3, true).unwrap();
        let res = main_attack(&c, &small(Route::Auto), &SeedStream::new(1)).unwrap();
        assert_eq!(res.paired_shift.value, 0.0);
        assert!(res.coupling.holds());
        assert!(res.records.iter().all(|t| t.out));
    }

    #[test]
    fn disabled_triggers_reproduce_honest_outputs() {
        let m = MajorityCoin::new(15, 3).unwrap();
        let cfg = AttackConfig { disable_triggers: true, ..small(Route::Auto) };
        let res = main_attack(&m, &cfg, &SeedStream::new(2)).unwrap();
        assert!(res.records.iter().all(|t| t.abort_round.is_none() && t.out == t.honest_out));
        assert!(res.coupling.holds());
    }

    #[test]
    fn single_round_parity_gives_quarter() {
        let cfg = AttackConfig { trials: 4000, ..small(Route::Auto) };
        let p = ParityProtocol::new(4, 1).unwrap();
        let base: Arc<dyn Protocol> = Arc::new(ParityProtocol::new(5, 1).unwrap());
        let g = cfl_protocol::group_parties(base, 2).unwrap();
        for proto in [&p as &dyn Protocol, &g] {
            let res = main_attack(proto, &cfg, &SeedStream::new(3)).unwrap();
            assert_eq!(res.kind, AdversaryKind::Ci93);
            assert!((res.bias.value - 0.25).abs() <= 4.0 * res.bias.se, "{:?}", res.bias);
        }
    }

    #[test]
    fn null_route_is_honest() {
        let m = MajorityCoin::new(5, 3).unwrap();
        let res = main_attack(&m, &small(Route::Null), &SeedStream::new(4)).unwrap();
        assert_eq!(res.kind, AdversaryKind::Null);
        assert_eq!(res.paired_shift.value, 0.0);
        assert_eq!(res.abort_rounds[0], res.trials);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = MajorityCoin::new(15, 3).unwrap();
        let a = main_attack(&m, &small(Route::Auto), &SeedStream::new(5)).unwrap();
        let b = main_attack(&m, &small(Route::Auto), &SeedStream::new(5)).unwrap();
        assert_eq!(a, b);
    }
}
