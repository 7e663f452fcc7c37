// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::SamplingInstance;
use crate::{CoreError, Scalar};

const SLACK: f64 = 1e-12;

/// Per-party reward lower bound for the Laplace halting experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    /// `λ(1-p)/p`; parties with `σ^h` at most this are similar.
    pub similarity_cap: T,
    pub similar: Vec<usize>,
    pub nonsimilar: Vec<usize>,
    pub v: Vec<T>,
    pub mean_v: T,
    /// `r·exp(-γ/2λ)`, zero on underflow.
    pub tail_term: T,
    /// `mean_v - tail_term`.
    pub lower_bound: T,
    /// Whether `s_i ≥ γ` for some round `i < r`.
    pub mean_reaches_gamma: bool,
    pub min_similar_halt_prob: Option<T>,
    /// `Some(all similar halt probabilities ≥ 1/6)` when `mean_reaches_gamma`.
    pub halt_floor_ok: Option<bool>,
}

/// Evaluates `E[v_H] - r·e^{-γ/2λ}` given `Pr[J ≠ r | H = h]` for each party.
pub fn theorem_42_bound<T: Scalar>(inst: &SamplingInstance<T>, halt_probs: &[T]) -> Result<BoundReport<T>, CoreError> {
    if halt_probs.len() != inst.n() {
        return Err(CoreError::LengthMismatch(halt_probs.len(), inst.n()));
    }
    let (lambda, p, gamma) = (inst.lambda(), inst.p(), inst.gamma());
    let one = T::one();
    let similarity_cap = lambda * (one - p) / p;
    let penalty_scale = T::lit(40.0) * p / (lambda * (one - p));
    let (mut similar, mut nonsimilar, mut v) = (Vec::new(), Vec::new(), Vec::with_capacity(inst.n()));
    for (h, &q) in halt_probs.iter().enumerate() {
        let s = inst.sigma(h);
        if s <= similarity_cap {
            similar.push(h);
            v.push(q * (gamma / T::lit(2.0) - penalty_scale * s * s));
        } else {
            nonsimilar.push(h);
            v.push(-T::lit(4.0) * s);
        }
    }
    let mean_v = v.iter().fold(T::zero(), |a, &b| a + b) / T::from_usize_lossy(v.len());
    let tail_term = tail_term(inst.r(), gamma, lambda);
    let mean_reaches_gamma = (0..inst.r() - 1).any(|i| inst.mean(i) >= gamma);
    let min_similar_halt_prob = similar.iter().map(|&h| halt_probs[h]).reduce(T::min);
    let halt_floor_ok = mean_reaches_gamma.then(|| min_similar_halt_prob.is_none_or(|m| m >= one / T::lit(6.0)));
    Ok(BoundReport {
        similarity_cap,
        similar,
        nonsimilar,
        v,
        mean_v,
        tail_term,
        lower_bound: mean_v - tail_term,
        mean_reaches_gamma,
        min_similar_halt_prob,
        halt_floor_ok,
    })
}

fn tail_term<T: Scalar>(r: usize, gamma: T, lambda: T) -> T {
    let t = T::from_usize_lossy(r) * (-(gamma / (T::lit(2.0) * lambda))).exp();
    if t.is_finite() { t.max(T::zero()) } else { T::zero() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorollaryRegime {
    General,
    Simplified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport<T> {
    pub general: T,
    /// `γδ/125 - 1/(2r)`, present only in the simplified regime.
    pub simplified: Option<T>,
    pub regime: CorollaryRegime,
    /// `α ≤ λ(1-p)/2p`.
    pub alpha_ok: bool,
    pub warnings: Vec<String>,
}

/// Reward lower bound over a distribution of instances with similarity-gap
/// tail parameters `α`, `β` and `Pr[max_i s_i ≥ γ] ≥ δ`. Logarithms are base 2.
pub fn corollary_43_bound<T: Scalar>(alpha: T, beta: T, gamma: T, delta: T, lambda: T, p: T, r: usize) -> CorollaryReport<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let rf = T::from_usize_lossy(r);
    let log_r = rf.log2();
    let odds = (one - p) / p;
    let mut warnings = Vec::new();
    let alpha_ok = alpha <= lambda * odds / two;
    if !alpha_ok {
        warnings.push(format!("alpha {alpha} exceeds lambda(1-p)/2p; only the general expression is reported"));
    }
    let general = (delta - beta / two) * (gamma / two - T::lit(40.0) * alpha * alpha / (lambda * odds)) / T::lit(6.0)
        - T::lit(168.0) * alpha * beta
        - T::lit(8.0) * alpha * beta * (one / lambda).log2()
        - tail_term(r, gamma, lambda) / two;
    let rel = |a: T, b: T| (a - b).abs() <= T::lit(1e-9) * b.abs().max(T::lit(1e-300));
    let simplified_ok = alpha_ok
        && r >= 2
        && gamma >= one / (T::lit(256.0) * rf.sqrt()) - T::lit(SLACK)
        && rel(lambda, gamma / (T::lit(4.0) * log_r))
        && alpha <= gamma * (T::lit(4.0) * odds).sqrt() / (T::lit(32.0) * log_r) + T::lit(SLACK)
        && beta <= delta / (T::lit(16.0) * odds.sqrt()) + T::lit(SLACK);
    let simplified = simplified_ok.then(|| gamma * delta / T::lit(125.0) - one / (two * rf));
    CorollaryReport {
        general,
        simplified,
        regime: if simplified_ok { CorollaryRegime::Simplified } else { CorollaryRegime::General },
        alpha_ok,
        warnings,
    }
}

/// Numeric evaluation of the two similarity-gap tail sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaTailReport<T> {
    /// `θ = (1-p)λ/p`.
    pub theta: T,
    pub precondition_ok: bool,
    pub precondition_issue: Option<String>,
    /// `E[σ·1{σ ≥ θ}]` and its bound `2αβ log₂(1/λ) + 2αβ`.
    pub outlier_lhs: T,
    pub outlier_rhs: T,
    pub outlier_ok: Option<bool>,
    /// `E[σ²·1{α ≤ σ ≤ θ}]` and its bound `4θαβ`.
    pub exsquared_lhs: T,
    pub exsquared_rhs: T,
    pub exsquared_ok: Option<bool>,
}

/// `atoms` lists `(σ, Pr[σ])` pairs of a discrete distribution on `[0,2]`.
/// The assertions are skipped when the tail hypothesis
/// `Pr[σ ≥ ρα] ≤ β/ρ` (for all `ρ ≥ 1`), `α ≤ θ/2` or `λ ≤ 1` fails.
pub fn check_sigma_tail_bounds<T: Scalar>(
    atoms: &[(T, T)],
    alpha: T,
    beta: T,
    lambda: T,
    p: T,
) -> Result<SigmaTailReport<T>, CoreError> {
    let bad = |m: &str| Err(CoreError::BadParameter(m.into()));
    if atoms.iter().any(|&(v, q)| !(v >= T::zero() && v <= T::lit(2.0)) || !(q >= T::zero())) {
        return bad("atoms need values in [0,2] and non-negative weights");
    }
    if atoms.iter().fold(T::zero(), |a, &(_, q)| a + q) > T::one() + T::lit(1e-9) {
        return bad("atom weights sum above 1");
    }
    if !(alpha > T::zero()) || !(beta >= T::zero()) || !(lambda > T::zero()) || !(p > T::zero() && p <= T::lit(0.5)) {
        return bad("need alpha > 0, beta ≥ 0, lambda > 0 and p in (0, 1/2]");
    }
    let theta = (T::one() - p) * lambda / p;
    let tail = |t: T| atoms.iter().filter(|&&(v, _)| v >= t).fold(T::zero(), |a, &(_, q)| a + q);
    let mut issue = None;
    if lambda > T::one() {
        issue = Some(format!("lambda {lambda} above 1"));
    } else if alpha > theta / T::lit(2.0) {
        issue = Some(format!("alpha {alpha} above theta/2 = {}", theta / T::lit(2.0)));
    } else if let Some(&(v, _)) =
        atoms.iter().find(|&&(v, _)| v >= alpha && tail(v) > beta * alpha / v + T::lit(SLACK))
    {
        issue = Some(format!("Pr[sigma >= {v}] = {} exceeds beta*alpha/sigma", tail(v)));
    }
    let outlier_lhs = atoms.iter().filter(|&&(v, _)| v >= theta).fold(T::zero(), |a, &(v, q)| a + v * q);
    let ab = alpha * beta;
    let outlier_rhs = T::lit(2.0) * ab * (T::one() / lambda).log2() + T::lit(2.0) * ab;
    let exsquared_lhs = atoms
        .iter()
        .filter(|&&(v, _)| v >= alpha && v <= theta)
        .fold(T::zero(), |a, &(v, q)| a + v * v * q);
    let exsquared_rhs = T::lit(4.0) * theta * ab;
    let ok = issue.is_none();
    Ok(SigmaTailReport {
        theta,
        precondition_ok: ok,
        precondition_issue: issue,
        outlier_lhs,
        outlier_rhs,
        outlier_ok: ok.then(|| outlier_lhs <= outlier_rhs + T::lit(SLACK)),
        exsquared_lhs,
        exsquared_rhs,
        exsquared_ok: ok.then(|| exsquared_lhs <= exsquared_rhs + T::lit(SLACK)),
    })
}
