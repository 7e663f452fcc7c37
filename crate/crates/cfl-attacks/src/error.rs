// SPDX-License-Identifier: Apache-2.0

use cfl_core::CoreError;
use cfl_protocol::ProtocolError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid attack configuration: {0}")]
    Config(String),
    #[error("no k ≥ 1 with C({n}, k) ≥ r·log(r)^(2k) for r = {r}")]
    NoValidK { n: usize, r: usize },
    #[error("coin space of {bits} bits exceeds the enumeration limit of {limit}")]
    CoinSpaceTooLarge { bits: usize, limit: usize },
    #[error("game-value table: {0}")]
    Table(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
