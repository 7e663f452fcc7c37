// SPDX-License-Identifier: Apache-2.0

//! `[0,1]`-valued sequences, empirical martingale classification and Monte
//! Carlo checks of the sum-of-squares gap results.

mod classify;
mod gap;
pub mod generators;
mod sequence;

pub use classify::{classify, ClassifyOptions, Flavor, MartingaleReport, DEFAULT_MIN_COUNT};
pub use gap::{
    check_coupled_u, check_ex_machina, gap_stats, CoupledUReport, ExMachinaReport, GapStats, COUPLED_UPPER, GAP_PROBABILITY,
    SOS_THRESHOLD,
};
pub use sequence::{coupled_u_sequence, diffs, sum_of_squares, DiffSequence, Ensemble, EnsembleMeta, Sequence};
