// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::protocol::Party;
use crate::ProtocolError;

/// A set of `k`-subsets of parties, each stored sorted, the set ordered and
/// duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TupleSet {
    k: usize,
    tuples: Vec<Vec<Party>>,
}

impl TupleSet {
    pub fn new(k: usize, tuples: Vec<Vec<Party>>) -> Result<Self, ProtocolError> {
        let mut set = BTreeSet::new();
        for mut t in tuples {
            t.sort_unstable();
            t.dedup();
            if t.len() != k {
                return Err(ProtocolError::BadTuples(format!("tuple {t:?} does not have arity {k}")));
            }
            set.insert(t);
        }
        Ok(Self { k, tuples: set.into_iter().collect() })
    }

    pub fn empty(k: usize) -> Self {
        Self { k, tuples: Vec::new() }
    }

    /// All `k`-subsets of `base`.
    pub fn choose_all(base: &[Party], k: usize) -> Self {
        let mut base = base.to_vec();
        base.sort_unstable();
        base.dedup();
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(k);
        fn rec(base: &[Party], k: usize, start: usize, cur: &mut Vec<Party>, out: &mut Vec<Vec<Party>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..base.len() {
                if base.len() - i < k - cur.len() {
                    break;
                }
                cur.push(base[i]);
                rec(base, k, i + 1, cur, out);
                cur.pop();
            }
        }
        rec(&base, k, 0, &mut cur, &mut out);
        Self { k, tuples: out }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tuples(&self) -> &[Vec<Party>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &[Party]) -> bool {
        let mut t = tuple.to_vec();
        t.sort_unstable();
        self.tuples.binary_search(&t).is_ok()
    }

    /// Union of all tuples.
    pub fn base(&self) -> Vec<Party> {
        let set: BTreeSet<Party> = self.tuples.iter().flatten().copied().collect();
        set.into_iter().collect()
    }

    /// `𝕊(h)`: tuples containing `h`.
    pub fn select(&self, h: Party) -> Self {
        Self { k: self.k, tuples: self.tuples.iter().filter(|t| t.binary_search(&h).is_ok()).cloned().collect() }
    }

    /// `𝕊\h`: tuples not containing `h`.
    pub fn remove(&self, h: Party) -> Self {
        Self { k: self.k, tuples: self.tuples.iter().filter(|t| t.binary_search(&h).is_err()).cloned().collect() }
    }

    /// Number of tuples containing `h`.
    pub fn count_with(&self, h: Party) -> usize {
        self.tuples.iter().filter(|t| t.binary_search(&h).is_ok()).count()
    }

    /// `𝕊₁‖𝕊₀ = {U₁ ∪ U₀}`; the two bases must be disjoint.
    pub fn concat(&self, other: &TupleSet) -> Result<Self, ProtocolError> {
        let a: BTreeSet<Party> = self.base().into_iter().collect();
        if other.base().iter().any(|p| a.contains(p)) {
            return Err(ProtocolError::BadTuples("concatenation of overlapping bases".into()));
        }
        let tuples = self
            .tuples
            .iter()
            .flat_map(|u| other.tuples.iter().map(move |v| u.iter().chain(v).copied().collect::<Vec<_>>()))
            .collect();
        Self::new(self.k + other.k, tuples)
    }

    /// Tuples in either set; arities must match.
    pub fn union(&self, other: &TupleSet) -> Result<Self, ProtocolError> {
        if self.k != other.k {
            return Err(ProtocolError::BadTuples("union of different arities".into()));
        }
        Self::new(self.k, self.tuples.iter().chain(&other.tuples).cloned().collect())
    }

    /// Tuples satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&[Party]) -> bool) -> Self {
        Self { k: self.k, tuples: self.tuples.iter().filter(|t| keep(t)).cloned().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn algebra_examples() {
        let s = TupleSet::choose_all(&[1, 2, 3], 2);
        assert_eq!(s.tuples(), &[vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(s.select(1).tuples(), &[vec![1, 2], vec![1, 3]]);
        assert_eq!(s.remove(1).tuples(), &[vec![2, 3]]);
        let a = TupleSet::new(1, vec![vec![1]]).unwrap();
        let b = TupleSet::new(1, vec![vec![2], vec![3]]).unwrap();
        assert_eq!(a.concat(&b).unwrap().tuples(), &[vec![1, 2], vec![1, 3]]);
        assert!(a.concat(&a).is_err());
    }

    #[test]
    fn choose_zero_is_single_empty_tuple() {
        let s = TupleSet::choose_all(&[4, 5], 0);
        assert_eq!(s.len(), 1);
        let a = TupleSet::choose_all(&[1, 2], 1);
        assert_eq!(a.concat(&s).unwrap(), a);
    }

    proptest! {
        #[test]
        fn select_remove_partition(n in 1usize..8, k in 0usize..4, h in 0usize..8) {
            let base: Vec<usize> = (0..n).collect();
            let s = TupleSet::choose_all(&base, k.min(n));
            let (a, b) = (s.select(h), s.remove(h));
            prop_assert_eq!(a.len() + b.len(), s.len());
            prop_assert_eq!(a.union(&b).unwrap(), s.clone());
            prop_assert!(a.tuples().iter().all(|t| !b.contains(t)));
        }
    }
}
