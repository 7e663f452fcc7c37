// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("laplace scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("grid step must lie in (0, 1], got {0}")]
    BadGrid(f64),
    #[error("success probabilities must be non-empty and lie in [0, 1]")]
    BadProbabilities,
    #[error("last success probability must equal 1, got {0}")]
    LastNotOne(f64),
    #[error("sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("half-sample bound needs an even population, got {0}")]
    OddPopulation(usize),
    #[error("invalid sequence: {0}")]
    BadSequence(String),
    #[error("invalid ensemble: {0}")]
    BadEnsemble(String),
    #[error("invalid sampling instance: {0}")]
    BadInstance(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}
