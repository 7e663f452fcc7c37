// SPDX-License-Identifier: Apache-2.0

//! The nugget finder and the exact structural checks on its output.
//!
//! The finder partitions `[n]` into `𝒜₁, 𝒜₀, 𝒫` of size `⌊n/3⌋` each, tests
//! the top-level gap between `𝒜_z‖C(𝒫, k−1)` by Monte Carlo and, when it is
//! large, descends through the levels `ℓ = k, …, 2` looking for a pair of
//! parties whose restricted backups diverge.

use std::collections::BTreeSet;

use cfl_core::SeedStream;
use cfl_protocol::{backup_trajectories, Coins, Party, Protocol, TupleSet};
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::params::{choose_k, similarity_thresholds, top_thresholds, RhoGrid};
use crate::AttackError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuggetConfig {
    /// Executions per Monte Carlo estimate.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Confidence parameter of the post-hoc re-check.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub rho_grid: RhoGrid,
}

fn default_budget() -> u64 {
    2000
}

fn default_epsilon() -> f64 {
    0.05
}

impl Default for NuggetConfig {
    fn default() -> Self {
        Self { budget: default_budget(), epsilon: default_epsilon(), rho_grid: RhoGrid::Full }
    }
}

/// One successful test of the descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentStep {
    /// Level `ℓ` the test ran at; `k + 1` for the top-level gap test.
    pub level: usize,
    pub z: Option<bool>,
    pub pair: Option<(Party, Party)>,
    pub rho: f64,
    pub p_hat: f64,
    pub gap_threshold: f64,
    pub prob_threshold: f64,
}

/// How the result was reached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub a1: Vec<Party>,
    pub a0: Vec<Party>,
    pub p: Vec<Party>,
    /// Parties fixed in every tuple by the descent, besides the pivots.
    pub q: Vec<Party>,
    /// Pivots `(c₁, c₀)` of the final level.
    pub pivots: Option<(Party, Party)>,
    /// Class `z` of `𝒜_z` kept by the first descent step.
    pub class: Option<bool>,
    pub steps: Vec<DescentStep>,
    /// Top-level `ρ` when the gap test fired with `k = 1`.
    pub rho_top: Option<f64>,
    /// The gap test fired with `k = 1`, where no level exists to descend to;
    /// the result falls through to `k* = k + 1`.
    pub degenerate_k1: bool,
    pub rho_grid: RhoGrid,
    pub budget: u64,
    pub seed_path: Vec<u64>,
}

/// The gap condition re-estimated on fresh executions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recheck {
    /// Largest `p̂(ρ) − bound(ρ)` over the grid for `k* = k + 1` (must be
    /// `≤ radius`), or `bound − p̂(ρ*)` otherwise (must be `≤ radius`).
    pub excess: f64,
    pub rho: f64,
    /// Hoeffding radius `√(ln(2/ε)/(2N))`.
    pub radius: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuggetResult {
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub k_star: usize,
    pub rho_star: f64,
    pub s1: TupleSet,
    pub s0: TupleSet,
    pub h: Vec<Party>,
    pub provenance: Provenance,
    pub recheck: Recheck,
}

impl NuggetResult {
    pub fn to_json(&self) -> Result<String, AttackError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, AttackError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Per-execution maxima `max_{i∈[r]} |B_i^{X} − B_i^{Y}|` for pairs of
/// sub-collections of `tuples`, given by index lists.
fn max_gaps(
    proto: &dyn Protocol,
    tuples: &[Vec<Party>],
    groups: &[Vec<usize>],
    pairs: &[(usize, usize)],
    budget: u64,
    stream: &SeedStream,
) -> Result<Vec<Vec<f64>>, AttackError> {
    let per_exec: Vec<Vec<f64>> = (0..budget)
        .into_par_iter()
        .map(|l| {
            let coins = Coins::sample(proto.n(), proto.coin_len(), &mut stream.child(l).rng());
            let rows = backup_trajectories(proto, &coins, tuples)?;
            let mut best = vec![0.0f64; pairs.len()];
            for row in &rows[1..] {
                let avg: Vec<f64> = groups
                    .iter()
                    .map(|g| g.iter().filter(|&&j| row[j]).count() as f64 / g.len() as f64)
                    .collect();
                for (b, &(x, y)) in best.iter_mut().zip(pairs) {
                    *b = b.max((avg[x] - avg[y]).abs());
                }
            }
            Ok(best)
        })
        .collect::<Result<_, AttackError>>()?;
    Ok((0..pairs.len()).map(|p| per_exec.iter().map(|v| v[p]).collect()).collect())
}

/// Fraction of `d` at or above `threshold`.
fn tail(d: &[f64], threshold: f64) -> f64 {
    d.iter().filter(|&&x| x >= threshold).count() as f64 / d.len() as f64
}

/// Smallest `ρ` with `p̂(gap(ρ)) ≥ prob(ρ)`.
fn first_rho(d: &[f64], grid: &[f64], thresholds: impl Fn(f64) -> (f64, f64)) -> Option<(f64, f64, f64, f64)> {
    grid.iter().find_map(|&rho| {
        let (gap, prob) = thresholds(rho);
        let p = tail(d, gap);
        (p >= prob).then_some((rho, p, gap, prob))
    })
}

/// Collections `S^ℓ_z(h)` for `z ∈ {1, 0}` and `h ∈ cands`, as index lists
/// into `s1.tuples() ‖ s0.tuples()`.
fn restricted(s1: &TupleSet, s0: &TupleSet, cands: &[Party]) -> (Vec<Vec<Party>>, Vec<Vec<usize>>) {
    let tuples: Vec<Vec<Party>> = s1.tuples().iter().chain(s0.tuples()).cloned().collect();
    let off = s1.len();
    let mut groups = Vec::new();
    for (base, set) in [(0, s1), (off, s0)] {
        for &h in cands {
            groups.push(
                set.tuples().iter().enumerate().filter(|(_, t)| t.binary_search(&h).is_ok()).map(|(j, _)| base + j).collect(),
            );
        }
    }
    (tuples, groups)
}

/// Runs the nugget finder on `proto`.
pub fn nugget_finder(proto: &dyn Protocol, cfg: &NuggetConfig, stream: &SeedStream) -> Result<NuggetResult, AttackError> {
    let (n, r) = (proto.n(), proto.rounds());
    if n < 3 {
        return Err(AttackError::Config(format!("the nugget finder needs n ≥ 3, got {n}")));
    }
    if cfg.budget == 0 {
        return Err(AttackError::Config("nugget budget must be at least 1".into()));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        return Err(AttackError::Config(format!("ε must lie in (0, 1), got {}", cfg.epsilon)));
    }
    if r < 2 {
        return Err(AttackError::Config(format!("the nugget thresholds need r ≥ 2, got {r}")));
    }
    let k = choose_k(n, r)?;
    let m = n / 3;
    if m < k.saturating_sub(1).max(1) {
        return Err(AttackError::Config(format!("a class of {m} parties cannot hold {} parties of a tuple", k - 1)));
    }
    let grid = cfg.rho_grid.points(r);
    let mut perm: Vec<Party> = (0..n).collect();
    perm.shuffle(&mut stream.child(0).rng());
    let sorted = |s: &[Party]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    let (a1, a0, p) = (sorted(&perm[..m]), sorted(&perm[m..2 * m]), sorted(&perm[2 * m..3 * m]));
    let tail_p = TupleSet::choose_all(&p, k - 1);
    let top1 = TupleSet::choose_all(&a1, 1).concat(&tail_p)?;
    let top0 = TupleSet::choose_all(&a0, 1).concat(&tail_p)?;

    let mut prov = Provenance {
        a1: a1.clone(),
        a0: a0.clone(),
        p: p.clone(),
        q: Vec::new(),
        pivots: None,
        class: None,
        steps: Vec::new(),
        rho_top: None,
        degenerate_k1: false,
        rho_grid: cfg.rho_grid,
        budget: cfg.budget,
        seed_path: stream.path().to_vec(),
    };

    let tuples: Vec<Vec<Party>> = top1.tuples().iter().chain(top0.tuples()).cloned().collect();
    let groups = vec![(0..top1.len()).collect(), (top1.len()..tuples.len()).collect()];
    let d = max_gaps(proto, &tuples, &groups, &[(0, 1)], cfg.budget, &stream.child(1))?;
    let top = first_rho(&d[0], &grid, |rho| top_thresholds(r, rho));

    let fall_through = |prov: Provenance| NuggetResult {
        n,
        r,
        k,
        k_star: k + 1,
        rho_star: 1.0,
        s1: top1.clone(),
        s0: top0.clone(),
        h: a0.clone(),
        provenance: prov,
        recheck: Recheck { excess: 0.0, rho: 1.0, radius: 0.0, holds: true },
    };

    let mut result = match top {
        None => fall_through(prov),
        Some((rho, p_hat, gap, prob)) if k == 1 => {
            prov.steps.push(DescentStep { level: 2, z: None, pair: None, rho, p_hat, gap_threshold: gap, prob_threshold: prob });
            prov.rho_top = Some(rho);
            prov.degenerate_k1 = true;
            fall_through(prov)
        }
        Some((rho, p_hat, gap, prob)) => {
            prov.steps.push(DescentStep {
                level: k + 1,
                z: None,
                pair: None,
                rho,
                p_hat,
                gap_threshold: gap,
                prob_threshold: prob,
            });
            descend(proto, cfg, stream, &grid, (n, r, k), (top1.clone(), top0.clone()), rho, p.clone(), prov)?
        }
    };
    result.recheck = recheck(proto, &result, cfg, &grid, &stream.child(2))?;
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn descend(
    proto: &dyn Protocol,
    cfg: &NuggetConfig,
    stream: &SeedStream,
    grid: &[f64],
    (n, r, k): (usize, usize, usize),
    (mut s1, mut s0): (TupleSet, TupleSet),
    rho_k: f64,
    mut h_cur: Vec<Party>,
    mut prov: Provenance,
) -> Result<NuggetResult, AttackError> {
    let mut rho_cur = rho_k;
    let mut pivots: Option<(Party, Party)> = None;
    for level in (2..=k).rev() {
        let cands: Vec<Party> = h_cur.iter().copied().filter(|&h| pivots.is_none_or(|(c1, c0)| h != c1 && h != c0)).collect();
        let (tuples, groups) = restricted(&s1, &s0, &cands);
        let c = cands.len();
        let mut pairs = Vec::new();
        for zi in 0..2 {
            for a in 0..c {
                for b in a + 1..c {
                    pairs.push((zi * c + a, zi * c + b));
                }
            }
        }
        let d = if pairs.is_empty() {
            Vec::new()
        } else {
            max_gaps(proto, &tuples, &groups, &pairs, cfg.budget, &stream.child(10 + level as u64))?
        };
        let hit = pairs.iter().zip(&d).find_map(|(&(x, y), dv)| {
            first_rho(dv, grid, |rho| similarity_thresholds(n, k, r, level, rho)).map(|t| (x, y, t))
        });
        let Some((x, y, (rho, p_hat, gap, prob))) = hit else {
            prov.pivots = pivots;
            return Ok(NuggetResult {
                n,
                r,
                k,
                k_star: level,
                rho_star: rho_cur,
                s1,
                s0,
                h: cands,
                provenance: prov,
                recheck: Recheck { excess: 0.0, rho: rho_cur, radius: 0.0, holds: true },
            });
        };
        let z = x < c;
        let (h, h2) = (cands[x % c], cands[y % c]);
        prov.steps.push(DescentStep { level, z: Some(z), pair: Some((h, h2)), rho, p_hat, gap_threshold: gap, prob_threshold: prob });
        let sz = if z { &s1 } else { &s0 };
        let next1 = sz.filter(|t| t.binary_search(&h).is_ok() && t.binary_search(&h2).is_err());
        let next0 = sz.filter(|t| t.binary_search(&h2).is_ok() && t.binary_search(&h).is_err());
        match pivots {
            Some((c1, c0)) => {
                prov.q.push(if z { c1 } else { c0 });
                h_cur.retain(|&p| p != c1 && p != c0);
            }
            None => prov.class = Some(z),
        }
        pivots = Some((h, h2));
        (s1, s0) = (next1, next0);
        rho_cur = rho;
    }
    prov.pivots = pivots;
    let h = if prov.class == Some(true) { prov.a1.clone() } else { prov.a0.clone() };
    Ok(NuggetResult {
        n,
        r,
        k,
        k_star: 1,
        rho_star: rho_cur,
        s1,
        s0,
        h,
        provenance: prov,
        recheck: Recheck { excess: 0.0, rho: rho_cur, radius: 0.0, holds: true },
    })
}

/// Re-estimates the gap condition of `res` on fresh executions.
fn recheck(
    proto: &dyn Protocol,
    res: &NuggetResult,
    cfg: &NuggetConfig,
    grid: &[f64],
    stream: &SeedStream,
) -> Result<Recheck, AttackError> {
    let radius = ((2.0 / cfg.epsilon).ln() / (2.0 * cfg.budget as f64)).sqrt();
    let tuples: Vec<Vec<Party>> = res.s1.tuples().iter().chain(res.s0.tuples()).cloned().collect();
    let groups = vec![(0..res.s1.len()).collect(), (res.s1.len()..tuples.len()).collect()];
    let d = max_gaps(proto, &tuples, &groups, &[(0, 1)], cfg.budget, stream)?.remove(0);
    let (excess, rho) = if res.k_star == res.k + 1 {
        grid.iter()
            .map(|&rho| {
                let (gap, prob) = top_thresholds(res.r, rho);
                (tail(&d, gap) - prob, rho)
            })
            .fold((f64::NEG_INFINITY, 1.0), |a, b| if b.0 > a.0 { b } else { a })
    } else {
        let (gap, prob) = similarity_thresholds(res.n, res.k, res.r, res.k_star + 1, res.rho_star);
        (prob - tail(&d, gap), res.rho_star)
    };
    Ok(Recheck { excess, rho, radius, holds: excess <= radius })
}

/// One exact structural identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureCheck {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

/// The set-combinatorial conditions on a nugget for its `k*`, evaluated by
/// exact counting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub k_star: usize,
    pub checks: Vec<StructureCheck>,
}

impl StructureReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    fn push(&mut self, name: &str, holds: bool, detail: String) {
        self.checks.push(StructureCheck { name: name.into(), holds, detail });
    }
}

type Q = Ratio<u128>;

/// `Pr_{h←H, U←𝕊(h)}[U = U′] = Pr_{U←𝕊}[U = U′]` for every `U′ ∈ 𝕊`.
fn uniform_over_h(set: &TupleSet, h: &[Party]) -> Result<(), String> {
    if set.is_empty() || h.is_empty() {
        return Err("empty tuple set or party set".into());
    }
    let counts: Vec<usize> = h.iter().map(|&p| set.count_with(p)).collect();
    if let Some((p, _)) = h.iter().zip(&counts).find(|(_, &c)| c == 0) {
        return Err(format!("𝕊({p}) is empty"));
    }
    let rhs = Q::new(1, set.len() as u128);
    for u in set.tuples() {
        let lhs: Q = h
            .iter()
            .zip(&counts)
            .filter(|(p, _)| u.binary_search(p).is_ok())
            .map(|(_, &c)| Q::new(1, (h.len() * c) as u128))
            .sum();
        if lhs != rhs {
            return Err(format!("tuple {u:?}: {lhs} ≠ {rhs}"));
        }
    }
    Ok(())
}

/// Evaluates the structural conditions of `res` exactly.
pub fn verify_structure(res: &NuggetResult) -> StructureReport {
    let mut rep = StructureReport { k_star: res.k_star, checks: Vec::new() };
    let h = &res.h;
    let distinct: BTreeSet<Party> = h.iter().copied().collect();
    rep.push("h_distinct_nonempty", !h.is_empty() && distinct.len() == h.len(), format!("|H| = {}", h.len()));
    let sets = [(&res.s1, "s1"), (&res.s0, "s0")];
    for (s, name) in sets {
        let arity = s.tuples().iter().all(|t| t.len() == res.k && t.iter().all(|&p| p < res.n));
        rep.push(&format!("{name}_k_subsets"), arity && !s.is_empty(), format!("|{name}| = {}", s.len()));
    }
    let k_star = res.k_star;
    if k_star == res.k + 1 {
        let empty = h.iter().all(|&p| res.s1.count_with(p) == 0);
        rep.push("s1_of_h_empty", empty, "𝕊₁(h) = ∅ for h ∈ H".into());
        let u = uniform_over_h(&res.s0, h);
        rep.push("s0_uniform_over_h", u.is_ok(), u.err().unwrap_or_default());
    } else if k_star >= 2 {
        let target = Q::new((k_star - 1) as u128, h.len().max(1) as u128);
        let mut equal = true;
        let mut detail = String::new();
        for (s, name) in sets {
            for &p in h {
                let pr = Q::new(s.count_with(p) as u128, s.len().max(1) as u128);
                if pr != target {
                    equal = false;
                    detail = format!("Pr_{name}[{p} ∈ U] = {pr}, expected {target}");
                }
            }
        }
        rep.push("membership_equal", equal, detail);
        rep.push("membership_at_most_half", target <= Q::new(1, 2), format!("{target}"));
        let ratio = (Q::from_integer(1) - target) / target;
        let bound = Q::new((res.n - res.k + k_star - 1) as u128, 4 * (k_star - 1) as u128);
        rep.push("ratio_bound", ratio >= bound, format!("{ratio} ≥ {bound}"));
        for (s, name) in sets {
            let u = uniform_over_h(s, h);
            rep.push(&format!("{name}_uniform_over_h"), u.is_ok(), u.err().unwrap_or_default());
        }
    } else {
        rep.push("h_at_least_third", 3 * h.len() >= res.n, format!("3·{} vs {}", h.len(), res.n));
        let sizes = res.s1.len() == h.len() && res.s0.len() == h.len();
        rep.push("sizes_equal_h", sizes, format!("|𝕊₁| = {}, |𝕊₀| = {}, |H| = {}", res.s1.len(), res.s0.len(), h.len()));
        let single = h.iter().all(|&p| res.s1.count_with(p) == 1 && res.s0.count_with(p) == 1);
        rep.push("singleton_restrictions", single, "|𝕊_z(h)| = 1".into());
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use cfl_protocol::protocols::{ConstantProtocol, MajorityCoin};

    #[test]
    fn identical_backups_fall_through() {
        let c = ConstantProtocol::new(12, 4, false).unwrap();
        let res = nugget_finder(&c, &NuggetConfig { budget: 50, ..Default::default() }, &SeedStream::new(1)).unwrap();
        assert_eq!(res.k_star, res.k + 1);
        assert_eq!(res.rho_star, 1.0);
        assert!(res.provenance.steps.is_empty());
        assert_eq!(res.h, res.provenance.a0);
        assert!(res.recheck.holds);
        assert!(verify_structure(&res).all_hold());
    }

    #[test]
    fn majority_n45_descends_to_singletons() {
        let m = MajorityCoin::new(45, 9).unwrap();
        let res = nugget_finder(&m, &NuggetConfig { budget: 200, ..Default::default() }, &SeedStream::new(2)).unwrap();
        assert_eq!(res.k, 2);
        assert_eq!(res.k_star, 1);
        assert_eq!(res.h.len(), 15);
        let rep = verify_structure(&res);
        assert!(rep.all_hold(), "{rep:?}");
    }

    #[test]
    fn majority_n128_is_degenerate() {
        let m = MajorityCoin::new(128, 9).unwrap();
        let res = nugget_finder(&m, &NuggetConfig { budget: 100, ..Default::default() }, &SeedStream::new(3)).unwrap();
        assert_eq!((res.k, res.k_star), (1, 2));
        assert!(res.provenance.degenerate_k1);
        assert!(verify_structure(&res).all_hold());
    }

    #[test]
    fn json_round_trip() {
        let c = ConstantProtocol::new(9, 3, true).unwrap();
        let res = nugget_finder(&c, &NuggetConfig { budget: 10, ..Default::default() }, &SeedStream::new(4)).unwrap();
        assert_eq!(NuggetResult::from_json(&res.to_json().unwrap()).unwrap(), res);
    }

    #[test]
    fn verifier_rejects_broken_results() {
        let c = ConstantProtocol::new(12, 4, false).unwrap();
        let mut res = nugget_finder(&c, &NuggetConfig { budget: 10, ..Default::default() }, &SeedStream::new(5)).unwrap();
        res.h = res.provenance.a1.clone();
        assert!(!verify_structure(&res).all_hold());
    }

    #[test]
    fn rejects_bad_configs() {
        let c = ConstantProtocol::new(9, 3, true).unwrap();
        let s = SeedStream::new(0);
        assert!(nugget_finder(&c, &NuggetConfig { budget: 0, ..Default::default() }, &s).is_err());
        assert!(nugget_finder(&c, &NuggetConfig { epsilon: 0.0, ..Default::default() }, &s).is_err());
        let two = ConstantProtocol::new(2, 3, true).unwrap();
        assert!(nugget_finder(&two, &NuggetConfig::default(), &s).is_err());
    }
}
