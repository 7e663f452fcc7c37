// SPDX-License-Identifier: Apache-2.0

//! Built-in protocols and exact or sampled correctness checks.

mod constant;
mod majority;
mod parity;
mod scripted;

pub use constant::ConstantProtocol;
pub use majority::MajorityCoin;
pub use parity::ParityProtocol;
pub use scripted::{BackupEntry, ScriptedProtocol, ScriptedSpec, MAX_SCRIPTED_BITS};

use cfl_core::stats::Proportion;
use cfl_core::SeedStream;

use crate::coins::Coins;
use crate::engine::run_honest;
use crate::protocol::Protocol;
use crate::ProtocolError;

/// Largest coin space enumerated exactly.
pub const MAX_ENUMERATION_BITS: usize = 20;

/// Iterates over all coin assignments of `proto`.
pub fn enumerate_coins(proto: &dyn Protocol) -> Result<impl Iterator<Item = Coins>, ProtocolError> {
    let bits = proto.coin_bits();
    if bits > MAX_ENUMERATION_BITS {
        return Err(ProtocolError::BadParams(format!(
            "coin space of {bits} bits exceeds the enumeration limit of {MAX_ENUMERATION_BITS}"
        )));
    }
    let (n, len) = (proto.n(), proto.coin_len());
    Ok((0..1u64 << bits).map(move |idx| Coins::from_index(n, len, idx)))
}

/// Exact `Pr[out = 1]` by enumerating every coin assignment.
pub fn exact_output_probability(proto: &dyn Protocol) -> Result<f64, ProtocolError> {
    let mut ones = 0u64;
    let mut total = 0u64;
    for coins in enumerate_coins(proto)? {
        ones += u64::from(run_honest(proto, &coins)?.1);
        total += 1;
    }
    Ok(ones as f64 / total as f64)
}

/// Honest output frequency over `trials` executions; trial `t` uses `stream.child(t)`.
pub fn sample_output_probability(proto: &dyn Protocol, trials: u64, stream: &SeedStream) -> Result<Proportion, ProtocolError> {
    let mut prop = Proportion::default();
    for t in 0..trials {
        let coins = Coins::sample(proto.n(), proto.coin_len(), &mut stream.child(t).rng());
        prop.record(run_honest(proto, &coins)?.1);
    }
    Ok(prop)
}
