// SPDX-License-Identifier: Apache-2.0

//! Round-based coin-flipping protocols, a rushing fail-stop execution engine,
//! backup values and tuple-set algebra.
//!
//! Parties are 0-based. Round `t ∈ 1..=r` is stored at transcript index
//! `t - 1`; backup round `0` means "before any message".

pub mod coins;
pub mod engine;
pub mod error;
pub mod grouped;
pub mod protocol;
pub mod protocols;
pub mod registry;
pub mod transcript;
pub mod tuples;

pub use coins::{CoinView, Coins};
pub use engine::{
    avg_backup, backup_trajectories, backup_value, replay_check, run_honest, run_with_adversary, AbortEvent,
    Adversary, AdversaryView, BackupTrajectory, Decision, Execution, NullAdversary,
};
pub use error::ProtocolError;
pub use grouped::{group_parties, GroupedProtocol};
pub use protocol::{Party, Protocol};
pub use registry::{build_protocol, ProtocolSpec};
pub use transcript::{AbortKind, Round, Transcript};
pub use tuples::TupleSet;
