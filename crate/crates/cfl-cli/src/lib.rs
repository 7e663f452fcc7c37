// SPDX-License-Identifier: Apache-2.0

//! Experiment harness behind the `cfl` binary: configuration, Monte Carlo
//! orchestration, JSONL records and CSV summaries.

pub mod config;
pub mod experiments;
pub mod records;
pub mod summary;

use cfl_attacks::AttackError;
use cfl_core::CoreError;
use cfl_protocol::ProtocolError;
use thiserror::Error;

pub use config::{ExperimentConfig, Generator, LapExpConfig, LemmaConfig, MartingaleCheckConfig, SCHEMA_VERSION};
pub use experiments::{run_experiment, Command, RunOptions, RunOutcome};
pub use records::{JsonlWriter, TrialRecord};
pub use summary::{estimate_bias, CiMethod, SummaryRow, Verdict};

/// Process exit status when every assertion passes.
pub const EXIT_PASS: i32 = 0;
/// Some summary row failed its assertion.
pub const EXIT_FAIL: i32 = 1;
/// The configuration was rejected.
pub const EXIT_CONFIG: i32 = 2;
/// An I/O or runtime error stopped the run.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// Exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_)
            | CliError::Protocol(_)
            | CliError::Core(_)
            | CliError::Attack(
                AttackError::Config(_)
                | AttackError::Protocol(_)
                | AttackError::Core(_)
                | AttackError::NoValidK { .. }
                | AttackError::CoinSpaceTooLarge { .. },
            ) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
