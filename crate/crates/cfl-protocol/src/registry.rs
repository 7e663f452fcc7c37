// SPDX-License-Identifier: Apache-2.0

//! Protocols addressed by name: `majority`, `parity`, `constant`,
//! `scripted:<path>`, optionally grouped.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grouped::group_parties;
use crate::protocol::Protocol;
use crate::protocols::{ConstantProtocol, MajorityCoin, ParityProtocol, ScriptedProtocol};
use crate::ProtocolError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub name: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub r: Option<usize>,
    /// Majority with even `r`: break ties with the last round coin.
    #[serde(default)]
    pub tie_break: bool,
    /// Output bit of the `constant` protocol.
    #[serde(default)]
    pub bit: bool,
    /// Wrap in the grouping reduction with this block size.
    #[serde(default)]
    pub group_size: Option<usize>,
    /// Directory against which relative `scripted:` paths resolve.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ProtocolSpec {
    pub fn named(name: &str, n: usize, r: usize) -> Self {
        Self {
            name: name.into(),
            n: Some(n),
            r: Some(r),
            tie_break: false,
            bit: false,
            group_size: None,
            base_dir: None,
        }
    }
}

pub fn build_protocol(spec: &ProtocolSpec) -> Result<Arc<dyn Protocol>, ProtocolError> {
    let need = |v: Option<usize>, what: &str| {
        v.ok_or_else(|| ProtocolError::BadParams(format!("protocol `{}` needs `{what}`", spec.name)))
    };
    let proto: Arc<dyn Protocol> = match spec.name.as_str() {
        "majority" if spec.tie_break => Arc::new(MajorityCoin::with_tie_break(need(spec.n, "n")?, need(spec.r, "r")?)?),
        "majority" => Arc::new(MajorityCoin::new(need(spec.n, "n")?, need(spec.r, "r")?)?),
        "parity" => Arc::new(ParityProtocol::new(need(spec.n, "n")?, need(spec.r, "r")?)?),
        "constant" => Arc::new(ConstantProtocol::new(need(spec.n, "n")?, need(spec.r, "r")?, spec.bit)?),
        other => match other.strip_prefix("scripted:") {
            Some(path) => {
                let mut p = PathBuf::from(path);
                if p.is_relative() {
                    if let Some(dir) = &spec.base_dir {
                        p = dir.join(p);
                    }
                }
                Arc::new(ScriptedProtocol::from_path(&p)?)
            }
            None => return Err(ProtocolError::UnknownProtocol(other.into())),
        },
    };
    match spec.group_size {
        Some(s) => Ok(Arc::new(group_parties(proto, s)?)),
        None => Ok(proto),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_by_name() {
        let p = build_protocol(&ProtocolSpec::named("majority", 5, 3)).unwrap();
        assert_eq!((p.n(), p.rounds()), (5, 3));
        assert!(build_protocol(&ProtocolSpec::named("nope", 5, 3)).is_err());
        let mut g = ProtocolSpec::named("parity", 4, 1);
        g.group_size = Some(1);
        assert_eq!(build_protocol(&g).unwrap().n(), 4);
    }

    #[test]
    fn loads_scripted_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x.json"), r#"{"n":2,"r":1,"output":"0110"}"#).unwrap();
        let mut spec = ProtocolSpec::named("scripted:x.json", 0, 0);
        spec.base_dir = Some(dir.path().to_path_buf());
        assert_eq!(build_protocol(&spec).unwrap().n(), 2);
    }
}
