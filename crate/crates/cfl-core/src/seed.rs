// SPDX-License-Identifier: Apache-2.0

//! Hierarchical seed derivation.
//!
//! A [`SeedStream`] is a master seed plus a derivation path. Two streams with
//! the same master seed and path yield the same ChaCha8 generator, so every
//! trial of an experiment can be replayed from `(master_seed, path)` alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator type handed out by [`SeedStream::rng`].
pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedStream {
    master_seed: u64,
    path: Vec<u64>,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, path: Vec::new() }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Stream one level below this one.
    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self { master_seed: self.master_seed, path }
    }

    /// Stream at `self.path ++ suffix`.
    pub fn derive(&self, suffix: &[u64]) -> Self {
        let mut path = self.path.clone();
        path.extend_from_slice(suffix);
        Self { master_seed: self.master_seed, path }
    }

    /// 64-bit digest of master seed and path.
    pub fn seed(&self) -> u64 {
        let mut h = splitmix64(self.master_seed ^ 0x6A09_E667_F3BC_C908);
        for (depth, &p) in self.path.iter().enumerate() {
            h = splitmix64(h ^ splitmix64(p.wrapping_add((depth as u64) << 56)));
        }
        h
    }

    pub fn rng(&self) -> StreamRng {
        let mut state = self.seed();
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}
