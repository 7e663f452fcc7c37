// SPDX-License-Identifier: Apache-2.0

//! Grouping reduction: an `n`-party protocol viewed as a `⌊n/s⌋`-party one
//! in which each virtual party simulates a block of base parties.

use std::sync::Arc;

use crate::coins::{CoinView, Coins};
use crate::protocol::{Party, Protocol};
use crate::transcript::Round;
use crate::ProtocolError;

/// Virtual party `v` owns base parties `v·s .. (v+1)·s`; the last block also
/// takes the `n mod s` leftover parties. A virtual message is the
/// concatenation of its members' messages, each prefixed by a little-endian
/// `u32` length.
#[derive(Clone)]
pub struct GroupedProtocol {
    base: Arc<dyn Protocol>,
    s: usize,
    blocks: Vec<Vec<Party>>,
}

/// Wraps `base` with blocks of size `s`; requires `1 ≤ s < n/2`.
pub fn group_parties(base: Arc<dyn Protocol>, s: usize) -> Result<GroupedProtocol, ProtocolError> {
    let n = base.n();
    if s == 0 || 2 * s >= n {
        return Err(ProtocolError::BadParams(format!("group size {s} must satisfy 1 ≤ s < n/2 with n = {n}")));
    }
    let m = n / s;
    let mut blocks: Vec<Vec<Party>> = (0..m).map(|v| (v * s..(v + 1) * s).collect()).collect();
    blocks[m - 1].extend(m * s..n);
    Ok(GroupedProtocol { base, s, blocks })
}

impl GroupedProtocol {
    pub fn base(&self) -> &Arc<dyn Protocol> {
        &self.base
    }

    pub fn group_size(&self) -> usize {
        self.s
    }

    pub fn block(&self, v: Party) -> &[Party] {
        &self.blocks[v]
    }

    /// Base parties of a set of virtual parties.
    pub fn expand_parties(&self, virtual_set: &[Party]) -> Vec<Party> {
        let mut out: Vec<Party> = virtual_set.iter().flat_map(|&v| self.blocks[v].iter().copied()).collect();
        out.sort_unstable();
        out
    }

    fn slot(&self) -> usize {
        self.base.coin_len()
    }

    /// Virtual coins carrying the given base coins.
    pub fn group_coins(&self, base: &Coins) -> Coins {
        let len = self.coin_len();
        let bits = self
            .blocks
            .iter()
            .map(|b| {
                let mut v = vec![false; len];
                for (k, &p) in b.iter().enumerate() {
                    v[k * self.slot()..(k + 1) * self.slot()].copy_from_slice(base.party(p));
                }
                v
            })
            .collect();
        Coins::new(bits).expect("uniform virtual coin length")
    }

    /// Base coins of the base parties whose virtual owner is visible in `view`.
    fn expand_view_coins(&self, view: &CoinView<'_>) -> Coins {
        let mut base = Coins::zeros(self.base.n(), self.slot());
        for (v, block) in self.blocks.iter().enumerate() {
            if let Some(c) = view.get(v) {
                for (k, &p) in block.iter().enumerate() {
                    base.party_mut(p).copy_from_slice(&c[k * self.slot()..(k + 1) * self.slot()]);
                }
            }
        }
        base
    }

    fn translate(&self, prefix: &[Round]) -> Vec<Round> {
        prefix
            .iter()
            .map(|r| {
                let mut out = Round::empty(self.base.n());
                for (v, block) in self.blocks.iter().enumerate() {
                    if let Some(msg) = r.message(v) {
                        let mut pos = 0;
                        for &p in block {
                            let len = u32::from_le_bytes(msg[pos..pos + 4].try_into().expect("length prefix")) as usize;
                            out.set_message(p, msg[pos + 4..pos + 4 + len].to_vec());
                            pos += 4 + len;
                        }
                    }
                }
                for &(v, kind) in r.aborts() {
                    for &p in &self.blocks[v] {
                        out.mark_abort(p, kind);
                    }
                }
                out
            })
            .collect()
    }
}

impl Protocol for GroupedProtocol {
    fn name(&self) -> String {
        format!("grouped({}, s={})", self.base.name(), self.s)
    }

    fn n(&self) -> usize {
        self.blocks.len()
    }

    fn rounds(&self) -> usize {
        self.base.rounds()
    }

    fn coin_len(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0) * self.slot()
    }

    fn next_message(&self, party: Party, round: usize, own_coins: &[bool], prefix: &[Round]) -> Vec<u8> {
        let base_prefix = self.translate(prefix);
        let mut out = Vec::new();
        for (k, &p) in self.blocks[party].iter().enumerate() {
            let coins = &own_coins[k * self.slot()..(k + 1) * self.slot()];
            let m = self.base.next_message(p, round, coins, &base_prefix);
            out.extend_from_slice(&(m.len() as u32).to_le_bytes());
            out.extend_from_slice(&m);
        }
        out
    }

    fn residual_output(&self, survivors: &[Party], coins: &CoinView<'_>, prefix: &[Round]) -> bool {
        self.residual_outputs(&[survivors.to_vec()], coins, prefix)[0]
    }

    fn residual_outputs(&self, sets: &[Vec<Party>], coins: &CoinView<'_>, prefix: &[Round]) -> Vec<bool> {
        let base_prefix = self.translate(prefix);
        let base_coins = self.expand_view_coins(coins);
        let base_sets: Vec<Vec<Party>> = sets.iter().map(|u| self.expand_parties(u)).collect();
        let visible = self.expand_parties(&coins.visible());
        self.base.residual_outputs(&base_sets, &base_coins.view(&visible), &base_prefix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_honest;
    use crate::protocols::{enumerate_coins, exact_output_probability, MajorityCoin, ParityProtocol};

    #[test]
    fn rejects_large_groups() {
        let base: Arc<dyn Protocol> = Arc::new(ParityProtocol::new(4, 1).unwrap());
        assert!(group_parties(base.clone(), 2).is_err());
        assert!(group_parties(base.clone(), 0).is_err());
        assert_eq!(group_parties(base, 1).unwrap().n(), 4);
    }

    #[test]
    fn grouped_majority_is_coupled_to_base() {
        let base: Arc<dyn Protocol> = Arc::new(MajorityCoin::new(6, 3).unwrap());
        let g = group_parties(base.clone(), 2).unwrap();
        assert_eq!(g.n(), 3);
        for coins in enumerate_coins(base.as_ref()).unwrap().step_by(7) {
            let vc = g.group_coins(&coins);
            assert_eq!(run_honest(&g, &vc).unwrap().1, run_honest(base.as_ref(), &coins).unwrap().1);
        }
        assert_eq!(exact_output_probability(&g).unwrap(), 0.5);
    }

    #[test]
    fn leftover_parties_join_last_block() {
        let base: Arc<dyn Protocol> = Arc::new(ParityProtocol::new(7, 1).unwrap());
        let g = group_parties(base, 3).unwrap();
        assert_eq!(g.block(1), &[3, 4, 5, 6]);
        assert_eq!(g.expand_parties(&[1]), vec![3, 4, 5, 6]);
    }
}
