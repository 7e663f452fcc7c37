// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid protocol parameters: {0}")]
    BadParams(String),
    #[error("coins shaped {got:?}, protocol expects {expected:?}")]
    CoinShape { expected: (usize, usize), got: (usize, usize) },
    #[error("party {0} out of range")]
    BadParty(usize),
    #[error("invalid tuple set: {0}")]
    BadTuples(String),
    #[error("empty tuple set")]
    EmptyTupleSet,
    #[error("round {round} out of range for an execution of {rounds} rounds")]
    BadRound { round: usize, rounds: usize },
    #[error("protocol is not deterministic: replay diverged at round {0}")]
    NonDeterministic(usize),
    #[error("adversary may only abort corrupted parties and keep corrupted parties: {0}")]
    IllegalDecision(String),
    #[error("scripted protocol: {0}")]
    Script(String),
    #[error("transcript: {0}")]
    Transcript(String),
    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),
    #[error("io: {0}")]
    Io(String),
}
