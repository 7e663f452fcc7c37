// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::protocol::Party;
use crate::ProtocolError;

/// Pre-sampled coins: `coin_len` bits per party.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coins {
    bits: Vec<Vec<bool>>,
}

impl Coins {
    pub fn new(bits: Vec<Vec<bool>>) -> Result<Self, ProtocolError> {
        let len = bits.first().map_or(0, Vec::len);
        if bits.iter().any(|b| b.len() != len) {
            return Err(ProtocolError::BadParams("ragged coin vectors".into()));
        }
        Ok(Self { bits })
    }

    pub fn zeros(n: usize, len: usize) -> Self {
        Self { bits: vec![vec![false; len]; n] }
    }

    pub fn sample<R: Rng + ?Sized>(n: usize, len: usize, rng: &mut R) -> Self {
        Self { bits: (0..n).map(|_| (0..len).map(|_| rng.random()).collect()).collect() }
    }

    /// Coins whose bit `j` of party `p` is bit `p·len + j` of `index`.
    pub fn from_index(n: usize, len: usize, index: u64) -> Self {
        let bits = (0..n)
            .map(|p| (0..len).map(|j| (index >> (p * len + j)) & 1 == 1).collect())
            .collect();
        Self { bits }
    }

    /// Inverse of [`Coins::from_index`]; requires at most 64 bits in total.
    pub fn to_index(&self) -> u64 {
        let len = self.len();
        let mut idx = 0u64;
        for (p, b) in self.bits.iter().enumerate() {
            for (j, &bit) in b.iter().enumerate() {
                idx |= u64::from(bit) << (p * len + j);
            }
        }
        idx
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    /// Bits per party.
    pub fn len(&self) -> usize {
        self.bits.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn party(&self, p: Party) -> &[bool] {
        &self.bits[p]
    }

    pub fn party_mut(&mut self, p: Party) -> &mut [bool] {
        &mut self.bits[p]
    }

    pub fn view_all(&self) -> CoinView<'_> {
        CoinView { coins: self, allowed: vec![true; self.n()] }
    }

    /// Read access restricted to `parties`.
    pub fn view(&self, parties: &[Party]) -> CoinView<'_> {
        let mut allowed = vec![false; self.n()];
        for &p in parties {
            allowed[p] = true;
        }
        CoinView { coins: self, allowed }
    }
}

/// Coins visible to a set of parties.
#[derive(Clone, Debug)]
pub struct CoinView<'a> {
    coins: &'a Coins,
    allowed: Vec<bool>,
}

impl<'a> CoinView<'a> {
    pub fn get(&self, p: Party) -> Option<&'a [bool]> {
        self.allowed.get(p).copied().unwrap_or(false).then(|| self.coins.party(p))
    }

    /// Like [`CoinView::get`] but panics on parties outside the view, which is
    /// a protocol bug.
    pub fn party(&self, p: Party) -> &'a [bool] {
        self.get(p).unwrap_or_else(|| panic!("party {p} is outside the coin view"))
    }

    pub fn can_see(&self, p: Party) -> bool {
        self.allowed.get(p).copied().unwrap_or(false)
    }

    pub fn visible(&self) -> Vec<Party> {
        (0..self.allowed.len()).filter(|&p| self.allowed[p]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        for idx in 0..64u64 {
            let c = Coins::from_index(3, 2, idx);
            assert_eq!(c.to_index(), idx);
        }
        assert_eq!(Coins::from_index(2, 2, 0b0110).party(1), &[true, false]);
    }

    #[test]
    fn view_restricts() {
        let c = Coins::zeros(3, 1);
        let v = c.view(&[1]);
        assert!(v.get(0).is_none());
        assert!(v.get(1).is_some());
        assert_eq!(v.visible(), vec![1]);
    }
}
