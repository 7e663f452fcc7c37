// SPDX-License-Identifier: Apache-2.0

//! Iterated Bernoulli trials and numeric checks of the first-success lemmas.
//!
//! For success probabilities `p_1..p_r` with `p_r = 1`, the first success
//! occurs at trial `i` with probability `q_i = p_i · Π_{j<i}(1 - p_j)`.
//! [`verify_bernoulli_lemmas`] evaluates, for a pair of such sequences:
//!
//! * the identity `Σ_i q_i · Σ_{j≤i} p_j = 1` for each sequence,
//! * the survival bound `|Π_{j≤i}(1-p'_j) - Π_{j≤i}(1-p_j)| ≤ 3ε Π(1-p̃_j) Σ p̃_j`,
//! * the pointwise bound `|q_i - q'_i| ≤ 3ε p̃_i Π_{j<i}(1-p̃_j) (1/3 + Σ_{j≤i} p̃_j)`,
//! * the aggregate bound `Σ_{i<r} |q_i - q'_i| ≤ 4ε (1 - q_r)`,
//!
//! where `p̃_j = min(p_j, p'_j)` and `ε` is the smallest value for which all
//! four ratios `p/p'`, `p'/p`, `(1-p)/(1-p')`, `(1-p')/(1-p)` lie in `1 ± ε`.

use serde::{Deserialize, Serialize};

use crate::{CoreError, Scalar};

/// Absolute tolerance for exact identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Slack added to the bound side of inequalities.
pub const BOUND_SLACK: f64 = 1e-12;
/// Largest ratio deviation for which the lemma checks are run.
pub const MAX_ADMISSIBLE_EPS: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliSeq<T> {
    p: Vec<T>,
}

impl<T: Scalar> BernoulliSeq<T> {
    pub fn new(p: Vec<T>) -> Result<Self, CoreError> {
        if p.is_empty() || p.iter().any(|&x| !(x >= T::zero() && x <= T::one())) {
            return Err(CoreError::BadProbabilities);
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> &[T] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    fn require_terminal(&self) -> Result<(), CoreError> {
        let last = *self.p.last().expect("non-empty by construction");
        if last != T::one() {
            return Err(CoreError::LastNotOne(last.as_f64()));
        }
        Ok(())
    }
}

/// First-success distribution `q`. Rejects sequences whose last entry is not 1.
pub fn first_success_dist<T: Scalar>(seq: &BernoulliSeq<T>) -> Result<Vec<T>, CoreError> {
    seq.require_terminal()?;
    Ok(first_success_unchecked(seq.p()))
}

fn first_success_unchecked<T: Scalar>(p: &[T]) -> Vec<T> {
    let mut survive = T::one();
    p.iter()
        .map(|&pi| {
            let q = pi * survive;
            survive = survive * (T::one() - pi);
            q
        })
        .collect()
}

fn ratio_deviation<T: Scalar>(num: T, den: T) -> Option<T> {
    if den == T::zero() {
        return (num == T::zero()).then(T::zero);
    }
    Some((num / den - T::one()).abs())
}

/// Smallest `ε` with all four ratio conditions, or `None` when some ratio has
/// a zero denominator and a non-zero numerator.
pub fn ratio_epsilon<T: Scalar>(a: &BernoulliSeq<T>, b: &BernoulliSeq<T>) -> Result<Option<T>, CoreError> {
    if a.len() != b.len() {
        return Err(CoreError::LengthMismatch(a.len(), b.len()));
    }
    let mut eps = T::zero();
    for (&p, &q) in a.p().iter().zip(b.p()) {
        let (cp, cq) = (T::one() - p, T::one() - q);
        for (n, d) in [(p, q), (q, p), (cq, cp), (cp, cq)] {
            match ratio_deviation(n, d) {
                Some(dev) => eps = eps.max(dev),
                None => return Ok(None),
            }
        }
    }
    Ok(Some(eps))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LemmaStatus {
    Checked,
    /// Ratio condition unsatisfiable or `ε` outside the admissible range.
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliReport<T> {
    pub status: LemmaStatus,
    pub eps: Option<T>,
    /// `Σ_i q_i Σ_{j≤i} p_j` for the first and second sequence.
    pub identity_sums: [T; 2],
    pub identity_ok: bool,
    pub survival_ok: bool,
    pub pointwise_ok: bool,
    pub aggregate_lhs: T,
    pub aggregate_rhs: T,
    pub aggregate_ok: bool,
    pub violations: Vec<String>,
}

impl<T: Scalar> BernoulliReport<T> {
    pub fn all_ok(&self) -> bool {
        self.status == LemmaStatus::Checked
            && self.identity_ok
            && self.survival_ok
            && self.pointwise_ok
            && self.aggregate_ok
    }
}

fn identity_sum<T: Scalar>(p: &[T], q: &[T]) -> T {
    let mut prefix = T::zero();
    let mut total = T::zero();
    for (&pi, &qi) in p.iter().zip(q) {
        prefix = prefix + pi;
        total = total + qi * prefix;
    }
    total
}

pub fn verify_bernoulli_lemmas<T: Scalar>(
    seq: &BernoulliSeq<T>,
    seq_prime: &BernoulliSeq<T>,
) -> Result<BernoulliReport<T>, CoreError> {
    seq.require_terminal()?;
    seq_prime.require_terminal()?;
    let eps = ratio_epsilon(seq, seq_prime)?;
    let (p, pp) = (seq.p(), seq_prime.p());
    let (q, qp) = (first_success_unchecked(p), first_success_unchecked(pp));
    let tol = T::lit(IDENTITY_TOL);
    let slack = T::lit(BOUND_SLACK);
    let identity_sums = [identity_sum(p, &q), identity_sum(pp, &qp)];
    let mut violations = Vec::new();
    let identity_ok = identity_sums.iter().all(|&s| (s - T::one()).abs() <= tol);
    if !identity_ok {
        violations.push(format!("identity sums {identity_sums:?} differ from 1"));
    }

    let r = p.len();
    let skipped = |reason: String| BernoulliReport {
        status: LemmaStatus::Skipped(reason),
        eps,
        identity_sums,
        identity_ok,
        survival_ok: true,
        pointwise_ok: true,
        aggregate_lhs: T::zero(),
        aggregate_rhs: T::zero(),
        aggregate_ok: true,
        violations: violations.clone(),
    };
    let eps = match eps {
        None => return Ok(skipped("ratio with zero denominator".into())),
        Some(e) if e.as_f64() > MAX_ADMISSIBLE_EPS => {
            return Ok(skipped(format!("epsilon {e} exceeds admissible range")))
        }
        Some(e) => e,
    };

    let three = T::lit(3.0);
    let tilde: Vec<T> = p.iter().zip(pp).map(|(&a, &b)| a.min(b)).collect();
    let (mut surv, mut surv_p, mut surv_t, mut sum_t) = (T::one(), T::one(), T::one(), T::zero());
    let (mut survival_ok, mut pointwise_ok) = (true, true);
    for i in 0..r {
        let surv_t_before = surv_t;
        surv = surv * (T::one() - p[i]);
        surv_p = surv_p * (T::one() - pp[i]);
        surv_t = surv_t * (T::one() - tilde[i]);
        sum_t = sum_t + tilde[i];
        let lhs = (surv_p - surv).abs();
        let rhs = three * eps * surv_t * sum_t;
        if lhs > rhs + slack {
            survival_ok = false;
            violations.push(format!("survival bound fails at i={}: {lhs} > {rhs}", i + 1));
        }
        let lhs = (q[i] - qp[i]).abs();
        let rhs = three * eps * tilde[i] * surv_t_before * (T::one() / three + sum_t);
        if lhs > rhs + slack {
            pointwise_ok = false;
            violations.push(format!("pointwise bound fails at i={}: {lhs} > {rhs}", i + 1));
        }
    }
    let aggregate_lhs = (0..r - 1).fold(T::zero(), |acc, i| acc + (q[i] - qp[i]).abs());
    let aggregate_rhs = T::lit(4.0) * eps * (T::one() - q[r - 1]);
    let aggregate_ok = aggregate_lhs <= aggregate_rhs + slack;
    if !aggregate_ok {
        violations.push(format!("aggregate bound fails: {aggregate_lhs} > {aggregate_rhs}"));
    }
    Ok(BernoulliReport {
        status: LemmaStatus::Checked,
        eps: Some(eps),
        identity_sums,
        identity_ok,
        survival_ok,
        pointwise_ok,
        aggregate_lhs,
        aggregate_rhs,
        aggregate_ok,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seq(p: &[f64]) -> BernoulliSeq<f64> {
        BernoulliSeq::new(p.to_vec()).unwrap()
    }

    #[test]
    fn first_success_examples() {
        assert_eq!(first_success_dist(&seq(&[1.0])).unwrap(), vec![1.0]);
        assert_eq!(first_success_dist(&seq(&[0.5, 1.0])).unwrap(), vec![0.5, 0.5]);
        let q = first_success_dist(&seq(&[0.2, 0.5, 1.0])).unwrap();
        for (a, b) in q.iter().zip([0.2, 0.4, 0.4]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(first_success_dist(&seq(&[0.5, 0.9])), Err(CoreError::LastNotOne(0.9)));
        assert!(BernoulliSeq::new(vec![1.2]).is_err());
    }

    #[test]
    fn identical_sequences() {
        let rep = verify_bernoulli_lemmas(&seq(&[0.3, 1.0]), &seq(&[0.3, 1.0])).unwrap();
        assert_eq!(rep.eps, Some(0.0));
        assert!(rep.all_ok());
        assert_eq!(rep.aggregate_lhs, 0.0);
    }

    #[test]
    fn close_sequences() {
        let rep = verify_bernoulli_lemmas(&seq(&[0.5, 1.0]), &seq(&[0.55, 1.0])).unwrap();
        assert!(rep.all_ok(), "{rep:?}");
        for s in rep.identity_sums {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        // ε = max(0.1, 1/11, 0.1, 1/9) = 1/9 from (1-p)/(1-p').
        assert_abs_diff_eq!(rep.eps.unwrap(), 1.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_denominator_is_reported() {
        let rep = verify_bernoulli_lemmas(&seq(&[0.0, 1.0]), &seq(&[0.2, 1.0])).unwrap();
        assert!(matches!(rep.status, LemmaStatus::Skipped(_)));
        assert_eq!(rep.eps, None);
    }

    #[test]
    fn length_mismatch() {
        assert!(verify_bernoulli_lemmas(&seq(&[1.0]), &seq(&[0.5, 1.0])).is_err());
    }
}
