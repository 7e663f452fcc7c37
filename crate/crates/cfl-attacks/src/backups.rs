// SPDX-License-Identifier: Apache-2.0

//! Backup counts of tuple sets along one honest execution.

use cfl_protocol::{backup_trajectories, Coins, Party, Protocol, TupleSet};

use crate::AttackError;

/// Backups of a list of tuple sets over rounds `0..=r` of one execution.
#[derive(Clone, Debug)]
pub struct SetBackups {
    /// `counts[set][round]`: number of tuples of the set whose backup is 1.
    pub counts: Vec<Vec<u32>>,
    pub sizes: Vec<usize>,
    /// Honest output of the execution.
    pub out: bool,
}

impl SetBackups {
    pub fn compute(proto: &dyn Protocol, coins: &Coins, sets: &[&TupleSet]) -> Result<Self, AttackError> {
        let mut all: Vec<Vec<Party>> = sets.iter().flat_map(|s| s.tuples().iter().cloned()).collect();
        all.push((0..proto.n()).collect());
        let rows = backup_trajectories(proto, coins, &all)?;
        let r = proto.rounds();
        let mut counts = Vec::with_capacity(sets.len());
        let mut offset = 0;
        for s in sets {
            let c = rows.iter().map(|row| row[offset..offset + s.len()].iter().filter(|&&b| b).count() as u32).collect();
            counts.push(c);
            offset += s.len();
        }
        Ok(Self { counts, sizes: sets.iter().map(|s| s.len()).collect(), out: rows[r][offset] })
    }

    /// `B_i` of set `set` at `round`.
    pub fn avg(&self, set: usize, round: usize) -> f64 {
        f64::from(self.counts[set][round]) / self.sizes[set] as f64
    }
}

/// Fraction of `true` entries.
pub(crate) fn mean_bits(bits: &[bool]) -> f64 {
    bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64
}

/// Number of `true` entries.
pub(crate) fn count_bits(bits: &[bool]) -> u32 {
    bits.iter().filter(|&&b| b).count() as u32
}

/// Tuples of `set` containing `h`, with `h` removed: the corrupted part of a
/// surviving tuple.
pub(crate) fn keep_pool(set: &TupleSet, h: Party) -> Vec<Vec<Party>> {
    set.select(h).tuples().iter().map(|t| t.iter().copied().filter(|&p| p != h).collect()).collect()
}
