// SPDX-License-Identifier: Apache-2.0

//! Per-trial records and the line-oriented JSONL appender.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cfl_attacks::{AdversaryKind, AttackTrial};
use cfl_protocol::AbortKind;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One attack trial; replayable from the configuration and `seed_path`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed_path: Vec<u64>,
    pub h: usize,
    pub kind: AdversaryKind,
    pub z: bool,
    pub abort_round: Option<usize>,
    pub abort_kind: Option<AbortKind>,
    pub out: bool,
    /// Output of the same coins without an adversary.
    pub honest_out: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub j_star: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x_at_decision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ns: Option<u64>,
}

impl From<&AttackTrial> for TrialRecord {
    fn from(t: &AttackTrial) -> Self {
        Self {
            trial: t.trial,
            seed_path: t.seed_path.clone(),
            h: t.h,
            kind: t.kind,
            z: t.z,
            abort_round: t.abort_round,
            abort_kind: t.abort_kind,
            out: t.out,
            honest_out: t.honest_out,
            j_star: t.j_star,
            x_at_decision: t.x_at_decision,
            wall_ns: None,
        }
    }
}

/// Appends one JSON object per line and flushes after each line, so a
/// truncated file stays valid line by line.
pub struct JsonlWriter<W: Write> {
    out: W,
    lines: u64,
}

impl JsonlWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        Ok(Self::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out, lines: 0 }
    }

    pub fn append<T: Serialize>(&mut self, record: &T) -> Result<(), CliError> {
        let mut line = serde_json::to_vec(record).map_err(|e| CliError::Io(e.to_string()))?;
        line.push(b'\n');
        self.out.write_all(&line)?;
        self.out.flush()?;
        self.lines += 1;
        Ok(())
    }

    pub fn lines(&self) -> u64 {
        self.lines
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_parse_individually() {
        let mut w = JsonlWriter::new(Vec::new());
        for i in 0..3u64 {
            w.append(&serde_json::json!({"trial": i, "x": 0.1})).unwrap();
        }
        assert_eq!(w.lines(), 3);
        let buf = w.into_inner();
        let text = String::from_utf8(buf).unwrap();
        for (i, line) in text.lines().enumerate() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["trial"], i as u64);
        }
        // A torn final line leaves the earlier ones intact.
        let cut = &text[..text.len() - 5];
        assert_eq!(cut.lines().filter(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()).count(), 2);
    }
}
