// SPDX-License-Identifier: Apache-2.0

//! The oblivious-sampling game: the Laplace-noised halting experiment, a
//! deterministic threshold baseline and the reward lower bounds.

mod bounds;
mod instance;
mod lapexp;

pub use bounds::{
    check_sigma_tail_bounds, corollary_43_bound, theorem_42_bound, BoundReport, CorollaryRegime, CorollaryReport,
    SigmaTailReport,
};
pub use instance::{adversarial_instance, SamplingInstance};
pub use lapexp::{
    estimate_halt_probs, exact_expected_reward, exact_halt_probs, run_lapexp, run_lapexp_for, run_threshold,
    threshold_expected_reward, Outcome,
};
