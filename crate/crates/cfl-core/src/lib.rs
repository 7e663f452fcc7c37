// SPDX-License-Identifier: Apache-2.0

//! Probability primitives, martingale diagnostics and the oblivious-sampling
//! game used by the coin-flipping attack laboratory.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`). Type aliases
//! for the `f64` instantiation are exported at the crate root.

pub mod bernoulli;
pub mod error;
pub mod grid;
pub mod hoeffding;
pub mod laplace;
pub mod martingale;
pub mod sampling;
pub mod scalar;
pub mod seed;
pub mod stats;

pub use error::CoreError;
pub use scalar::Scalar;
pub use seed::SeedStream;

/// Laplace distribution over `f64`.
pub type Laplace = laplace::Laplace<f64>;
/// Discretisation grid over `f64`.
pub type Grid = grid::Grid<f64>;
/// Bernoulli success-probability sequence over `f64`.
pub type BernoulliSeq = bernoulli::BernoulliSeq<f64>;
/// `[0,1]`-valued sequence over `f64`.
pub type Sequence = martingale::Sequence<f64>;
/// Ensemble of `f64` sequences.
pub type Ensemble = martingale::Ensemble<f64>;
/// Oblivious-sampling instance over `f64`.
pub type SamplingInstance = sampling::SamplingInstance<f64>;
