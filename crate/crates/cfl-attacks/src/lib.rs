// SPDX-License-Identifier: Apache-2.0

//! Fail-stop attacks on coin-flipping protocols.

pub mod backups;
pub mod ci93;
pub mod dp;
pub mod error;
pub mod gamevalue;
pub mod main_attack;
pub mod mart;
pub mod nugget;
pub mod params;
pub mod sing;
pub mod trigger;

pub use error::AttackError;
pub use gamevalue::{build_x, eval_counts, eval_x, BuildMode, BuildXConfig, GameValueTable, XTrace};
pub use mart::{MartAttack, MartConfig, MartRecord, MartStep};
pub use dp::{DpAttack, DpRecord};
pub use sing::{half_sample_deviation, SingAttack, SingRecord};
pub use ci93::{Ci93Attack, Ci93Oracle, Ci93Record};
pub use nugget::{nugget_finder, verify_structure, NuggetConfig, NuggetResult, Provenance, StructureReport};
pub use main_attack::{main_attack, AdversaryKind, AttackConfig, AttackResult, AttackTrial, Candidate, Route};
