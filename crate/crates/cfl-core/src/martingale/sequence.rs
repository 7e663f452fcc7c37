// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::gap::SOS_THRESHOLD;
use crate::{CoreError, Scalar};

/// `X_0..X_r` with every entry in `[0,1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sequence<T> {
    x: Vec<T>,
}

impl<T: Scalar> Sequence<T> {
    pub fn new(x: Vec<T>) -> Result<Self, CoreError> {
        if x.is_empty() {
            return Err(CoreError::BadSequence("empty sequence".into()));
        }
        if let Some(v) = x.iter().find(|&&v| !(v >= T::zero() && v <= T::one())) {
            return Err(CoreError::BadSequence(format!("entry {v} outside [0,1]")));
        }
        Ok(Self { x })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    /// Number of steps `r`.
    pub fn rounds(&self) -> usize {
        self.x.len() - 1
    }

    pub fn first(&self) -> T {
        self.x[0]
    }

    pub fn last(&self) -> T {
        self.x[self.x.len() - 1]
    }

    /// Reflected sequence `1 - X_i`.
    pub fn reflect(&self) -> Self {
        Self { x: self.x.iter().map(|&v| T::one() - v).collect() }
    }
}

/// `Y_1..Y_r` with `Y_i = X_i - X_{i-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffSequence<T> {
    y: Vec<T>,
}

impl<T: Scalar> DiffSequence<T> {
    pub fn y(&self) -> &[T] {
        &self.y
    }

    /// Prefix sums starting from `x0`.
    pub fn reconstruct(&self, x0: T) -> Vec<T> {
        let mut acc = x0;
        std::iter::once(x0)
            .chain(self.y.iter().map(|&d| {
                acc = acc + d;
                acc
            }))
            .collect()
    }
}

pub fn diffs<T: Scalar>(seq: &Sequence<T>) -> DiffSequence<T> {
    DiffSequence { y: seq.x.windows(2).map(|w| w[1] - w[0]).collect() }
}

pub fn sum_of_squares<T: Scalar>(seq: &Sequence<T>) -> T {
    seq.x.windows(2).fold(T::zero(), |acc, w| acc + (w[1] - w[0]) * (w[1] - w[0]))
}

/// `U_i = X_i` while `Σ_{j<i} Y_j² ≤ 1/16`, frozen at `U_{i-1}` afterwards.
pub fn coupled_u_sequence<T: Scalar>(seq: &Sequence<T>) -> Sequence<T> {
    let thr = T::lit(SOS_THRESHOLD);
    let mut u = Vec::with_capacity(seq.x.len());
    u.push(seq.x[0]);
    let mut sos = T::zero();
    for i in 1..seq.x.len() {
        let next = if sos <= thr { seq.x[i] } else { u[i - 1] };
        u.push(next);
        let y = seq.x[i] - seq.x[i - 1];
        sos = sos + y * y;
    }
    Sequence { x: u }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub generator: String,
    pub r: usize,
    pub seed: u64,
}

/// Sequences drawn from a single generator, all with `r` steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble<T> {
    sequences: Vec<Sequence<T>>,
    meta: EnsembleMeta,
}

impl<T: Scalar> Ensemble<T> {
    pub fn new(sequences: Vec<Sequence<T>>, meta: EnsembleMeta) -> Result<Self, CoreError> {
        if let Some(s) = sequences.iter().find(|s| s.rounds() != meta.r) {
            return Err(CoreError::BadEnsemble(format!(
                "sequence with {} rounds in an ensemble with r = {}",
                s.rounds(),
                meta.r
            )));
        }
        Ok(Self { sequences, meta })
    }

    pub fn sequences(&self) -> &[Sequence<T>] {
        &self.sequences
    }

    pub fn meta(&self) -> &EnsembleMeta {
        &self.meta
    }

    pub fn r(&self) -> usize {
        self.meta.r
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Sequence<T>>, EnsembleMeta) {
        (self.sequences, self.meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(x: &[f64]) -> Sequence<f64> {
        Sequence::new(x.to_vec()).unwrap()
    }

    #[test]
    fn diff_examples() {
        assert_eq!(diffs(&seq(&[0.5, 0.5, 1.0])).y(), &[0.0, 0.5]);
        assert_eq!(diffs(&seq(&[0.5, 0.75, 0.0])).y(), &[0.25, -0.75]);
        assert!(diffs(&seq(&[0.3; 6])).y().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn sos_examples() {
        assert_eq!(sum_of_squares(&seq(&[0.5, 0.0, 0.0])), 0.25);
        assert_eq!(sum_of_squares(&seq(&[0.5, 0.75, 1.0])), 0.125);
        let mut x = vec![0.5; 9];
        x.push(1.0);
        assert_eq!(sum_of_squares(&seq(&x)), 0.25);
    }

    #[test]
    fn coupled_u_examples() {
        let s = seq(&[0.5, 0.6, 0.55, 0.6]);
        assert_eq!(coupled_u_sequence(&s), s);
        assert_eq!(coupled_u_sequence(&seq(&[0.5, 1.0, 0.0])).x(), &[0.5, 1.0, 1.0]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(Sequence::new(vec![0.5, 1.5]).is_err());
        assert!(Sequence::<f64>::new(vec![]).is_err());
        let meta = EnsembleMeta { generator: "t".into(), r: 2, seed: 0 };
        assert!(Ensemble::new(vec![seq(&[0.5, 1.0])], meta).is_err());
    }

    proptest! {
        #[test]
        fn diffs_reconstruct(x in prop::collection::vec(0.0f64..=1.0, 1..40)) {
            let s = seq(&x);
            let back = diffs(&s).reconstruct(s.first());
            prop_assert_eq!(back.len(), x.len());
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn coupled_u_never_unfreezes(x in prop::collection::vec(0.0f64..=1.0, 1..40)) {
            let s = seq(&x);
            let u = coupled_u_sequence(&s);
            let y = diffs(&s);
            let mut sos = 0.0;
            for i in 1..x.len() {
                if sos > SOS_THRESHOLD {
                    prop_assert_eq!(u.x()[i], u.x()[i - 1]);
                } else {
                    prop_assert_eq!(u.x()[i], x[i]);
                }
                sos += y.y()[i - 1] * y.y()[i - 1];
            }
        }
    }
}
