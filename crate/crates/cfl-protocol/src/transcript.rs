// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::protocol::Party;
use crate::ProtocolError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortKind {
    /// Aborted without sending the round's message.
    BeforeSend,
    /// Sent the round's message, then aborted.
    AfterSend,
}

/// One round: the delivered message per party and abort markers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    messages: Vec<Option<Vec<u8>>>,
    aborts: Vec<(Party, AbortKind)>,
}

impl Round {
    pub fn empty(n: usize) -> Self {
        Self { messages: vec![None; n], aborts: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.messages.len()
    }

    pub fn message(&self, p: Party) -> Option<&[u8]> {
        self.messages.get(p).and_then(|m| m.as_deref())
    }

    pub fn set_message(&mut self, p: Party, msg: Vec<u8>) {
        self.messages[p] = Some(msg);
    }

    pub fn aborts(&self) -> &[(Party, AbortKind)] {
        &self.aborts
    }

    pub fn mark_abort(&mut self, p: Party, kind: AbortKind) {
        self.aborts.push((p, kind));
    }

    /// All parties delivered and nobody aborted before sending.
    pub fn is_complete(&self) -> bool {
        self.messages.iter().all(Option::is_some)
    }
}

/// Ordered rounds of an execution.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    rounds: Vec<Round>,
}

#[derive(Serialize, Deserialize)]
struct RoundLine {
    round: usize,
    messages: BTreeMap<Party, String>,
    aborts: Vec<AbortLine>,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct AbortLine {
    party: Party,
    kind: AbortKind,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, round: Round) {
        self.rounds.push(round);
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Rounds `1..=i`.
    pub fn prefix(&self, i: usize) -> &[Round] {
        &self.rounds[..i]
    }

    /// One JSON object per round, messages hex-encoded.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), ProtocolError> {
        for (i, r) in self.rounds.iter().enumerate() {
            let line = RoundLine {
                round: i + 1,
                n: r.n(),
                messages: (0..r.n()).filter_map(|p| r.message(p).map(|m| (p, hex::encode(m)))).collect(),
                aborts: r.aborts.iter().map(|&(party, kind)| AbortLine { party, kind }).collect(),
            };
            let s = serde_json::to_string(&line).map_err(|e| ProtocolError::Transcript(e.to_string()))?;
            writeln!(w, "{s}").map_err(|e| ProtocolError::Io(e.to_string()))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, ProtocolError> {
        let err = |e: String| ProtocolError::Transcript(e);
        let mut t = Transcript::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| ProtocolError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rl: RoundLine = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
            if rl.round != i + 1 {
                return Err(err(format!("expected round {}, found {}", i + 1, rl.round)));
            }
            let mut round = Round::empty(rl.n);
            for (p, m) in rl.messages {
                if p >= rl.n {
                    return Err(ProtocolError::BadParty(p));
                }
                round.set_message(p, hex::decode(m).map_err(|e| err(e.to_string()))?);
            }
            round.aborts = rl.aborts.into_iter().map(|a| (a.party, a.kind)).collect();
            t.push(round);
        }
        Ok(t)
    }
}
