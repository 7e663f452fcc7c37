// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coins::{CoinView, Coins};
use crate::protocol::{Party, Protocol};
use crate::transcript::Round;
use crate::ProtocolError;

/// Largest coin space a scripted table may cover.
pub const MAX_SCRIPTED_BITS: usize = 20;

/// JSON form of a table-driven protocol.
///
/// Each party owns `r · bits_per_round` coin bits and reveals its round-`t`
/// bits in round `t`. Tables are strings of `0`/`1` indexed by the coin index,
/// whose bit `p · r · bits_per_round + j` is coin bit `j` of party `p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub n: usize,
    pub r: usize,
    #[serde(default = "one")]
    pub bits_per_round: usize,
    pub output: String,
    #[serde(default)]
    pub backups: Vec<BackupEntry>,
}

fn one() -> usize {
    1
}

/// Residual output table of survivor set `survivors` after round `round`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackupEntry {
    pub survivors: Vec<Party>,
    pub round: usize,
    pub table: String,
}

/// Table-driven protocol. Without a backup table for `(U, i)`, survivors
/// evaluate the output table with the unrevealed bits of other parties set to 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptedProtocol {
    name: String,
    n: usize,
    r: usize,
    b: usize,
    output: Vec<bool>,
    backups: HashMap<(Vec<Party>, usize), Vec<bool>>,
}

fn parse_table(s: &str, len: usize, what: &str) -> Result<Vec<bool>, ProtocolError> {
    let bits: Vec<bool> = s
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(ProtocolError::Script(format!("{what}: invalid character {other:?}"))),
        })
        .collect::<Result<_, _>>()?;
    if bits.len() != len {
        return Err(ProtocolError::Script(format!("{what}: expected {len} entries, found {}", bits.len())));
    }
    Ok(bits)
}

fn render_table(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl ScriptedProtocol {
    pub fn from_spec(spec: &ScriptedSpec) -> Result<Self, ProtocolError> {
        let (n, r, b) = (spec.n, spec.r, spec.bits_per_round);
        if n < 2 || r == 0 || b == 0 {
            return Err(ProtocolError::Script(format!("need n ≥ 2, r ≥ 1, bits_per_round ≥ 1; got {n}, {r}, {b}")));
        }
        let bits = n * r * b;
        if bits > MAX_SCRIPTED_BITS {
            return Err(ProtocolError::Script(format!("{bits} coin bits exceed the limit of {MAX_SCRIPTED_BITS}")));
        }
        let size = 1usize << bits;
        let output = parse_table(&spec.output, size, "output")?;
        let mut proto = Self {
            name: spec.name.clone().unwrap_or_else(|| format!("scripted(n={n}, r={r})")),
            n,
            r,
            b,
            output,
            backups: HashMap::new(),
        };
        for e in &spec.backups {
            let table = parse_table(&e.table, size, &format!("backup {:?}@{}", e.survivors, e.round))?;
            proto.insert_backup(e.survivors.clone(), e.round, table)?;
        }
        Ok(proto)
    }

    pub fn from_json(text: &str) -> Result<Self, ProtocolError> {
        let spec: ScriptedSpec = serde_json::from_str(text).map_err(|e| ProtocolError::Script(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn from_path(path: &Path) -> Result<Self, ProtocolError> {
        let text = std::fs::read_to_string(path).map_err(|e| ProtocolError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Tabulates `f` over the whole coin space.
    pub fn from_fn(n: usize, r: usize, b: usize, f: impl Fn(&Coins) -> bool) -> Result<Self, ProtocolError> {
        let bits = n * r * b;
        if bits > MAX_SCRIPTED_BITS {
            return Err(ProtocolError::Script(format!("{bits} coin bits exceed the limit of {MAX_SCRIPTED_BITS}")));
        }
        let table = (0..1u64 << bits).map(|i| f(&Coins::from_index(n, r * b, i)));
        let spec = ScriptedSpec {
            name: None,
            n,
            r,
            bits_per_round: b,
            output: render_table(&table.collect::<Vec<_>>()),
            backups: Vec::new(),
        };
        Self::from_spec(&spec)
    }

    /// Adds a backup table for `(survivors, round)` tabulated from `f`.
    pub fn with_backup_fn(
        mut self,
        survivors: Vec<Party>,
        round: usize,
        f: impl Fn(&Coins) -> bool,
    ) -> Result<Self, ProtocolError> {
        let len = self.r * self.b;
        let table = (0..1u64 << self.coin_bits()).map(|i| f(&Coins::from_index(self.n, len, i))).collect();
        self.insert_backup(survivors, round, table)?;
        Ok(self)
    }

    pub fn to_spec(&self) -> ScriptedSpec {
        let mut backups: Vec<BackupEntry> = self
            .backups
            .iter()
            .map(|((u, i), t)| BackupEntry { survivors: u.clone(), round: *i, table: render_table(t) })
            .collect();
        backups.sort_by(|a, b| (a.round, &a.survivors).cmp(&(b.round, &b.survivors)));
        ScriptedSpec {
            name: Some(self.name.clone()),
            n: self.n,
            r: self.r,
            bits_per_round: self.b,
            output: render_table(&self.output),
            backups,
        }
    }

    pub fn bits_per_round(&self) -> usize {
        self.b
    }

    pub fn output_table(&self) -> &[bool] {
        &self.output
    }

    fn insert_backup(&mut self, mut survivors: Vec<Party>, round: usize, table: Vec<bool>) -> Result<(), ProtocolError> {
        survivors.sort_unstable();
        survivors.dedup();
        if survivors.iter().any(|&p| p >= self.n) || round > self.r {
            return Err(ProtocolError::Script(format!("backup {survivors:?}@{round} out of range")));
        }
        let mask = self.visible_mask(&survivors, round);
        if let Some(idx) = (0..table.len()).find(|&i| table[i] != table[i & mask as usize]) {
            return Err(ProtocolError::Script(format!(
                "backup {survivors:?}@{round} depends on hidden coins (index {idx})"
            )));
        }
        self.backups.insert((survivors, round), table);
        Ok(())
    }

    /// Coin-index bits known to `survivors` after `round` rounds.
    fn visible_mask(&self, survivors: &[Party], round: usize) -> u64 {
        let len = self.r * self.b;
        let mut mask = 0u64;
        for p in 0..self.n {
            let upto = if survivors.contains(&p) { len } else { round * self.b };
            for j in 0..upto {
                mask |= 1 << (p * len + j);
            }
        }
        mask
    }

    fn residual_index(&self, survivors: &[Party], coins: &CoinView<'_>, prefix: &[Round]) -> usize {
        let len = self.r * self.b;
        let mut idx = 0usize;
        for (t, round) in prefix.iter().enumerate() {
            for p in 0..self.n {
                let msg = round.message(p).expect("residual prefix rounds are complete");
                for (k, &bit) in msg.iter().enumerate() {
                    idx |= usize::from(bit & 1) << (p * len + t * self.b + k);
                }
            }
        }
        for &u in survivors {
            for (j, &bit) in coins.party(u).iter().enumerate().skip(prefix.len() * self.b) {
                idx |= usize::from(bit) << (u * len + j);
            }
        }
        idx
    }
}

impl Protocol for ScriptedProtocol {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn n(&self) -> usize {
        self.n
    }

    fn rounds(&self) -> usize {
        self.r
    }

    fn coin_len(&self) -> usize {
        self.r * self.b
    }

    fn next_message(&self, _party: Party, round: usize, own_coins: &[bool], _prefix: &[Round]) -> Vec<u8> {
        own_coins[(round - 1) * self.b..round * self.b].iter().map(|&b| u8::from(b)).collect()
    }

    fn residual_output(&self, survivors: &[Party], coins: &CoinView<'_>, prefix: &[Round]) -> bool {
        let idx = self.residual_index(survivors, coins, prefix);
        let mut key = survivors.to_vec();
        key.sort_unstable();
        match self.backups.get(&(key, prefix.len())) {
            Some(table) => table[idx],
            None => self.output[idx],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{backup_value, run_honest};
    use crate::protocols::{enumerate_coins, exact_output_probability, ParityProtocol};

    #[test]
    fn xor_table_matches_parity() {
        let s = ScriptedProtocol::from_json(r#"{"n":2,"r":1,"output":"0110"}"#).unwrap();
        let p = ParityProtocol::new(2, 1).unwrap();
        for coins in enumerate_coins(&s).unwrap() {
            assert_eq!(run_honest(&s, &coins).unwrap().1, run_honest(&p, &coins).unwrap().1);
        }
    }

    #[test]
    fn constant_table_is_biased() {
        let s = ScriptedProtocol::from_json(r#"{"n":2,"r":1,"output":"1111"}"#).unwrap();
        assert_eq!(exact_output_probability(&s).unwrap() - 0.5, 0.5);
    }

    #[test]
    fn backup_tables_are_returned_verbatim() {
        // 3 parties, 1 round; party 0 alone outputs its own bit, parties {1,2} output 1.
        let table0: String = (0..8).map(|i| if i & 1 == 1 { '1' } else { '0' }).collect();
        let json = format!(
            r#"{{"n":3,"r":1,"output":"01101001","backups":[
                {{"survivors":[0],"round":0,"table":"{table0}"}},
                {{"survivors":[1,2],"round":0,"table":"11111111"}}]}}"#
        );
        let s = ScriptedProtocol::from_json(&json).unwrap();
        for coins in enumerate_coins(&s).unwrap() {
            assert_eq!(backup_value(&s, &coins, &[0], 0).unwrap(), coins.party(0)[0]);
            assert!(backup_value(&s, &coins, &[1, 2], 0).unwrap());
        }
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(ScriptedProtocol::from_json(r#"{"n":2,"r":1,"output":"011"}"#).is_err());
        assert!(ScriptedProtocol::from_json(r#"{"n":2,"r":1,"output":"01x0"}"#).is_err());
        assert!(ScriptedProtocol::from_json(r#"{"n":2,"r":1,"output":"0110","extra":1}"#).is_err());
        // Backup of {0} at round 0 reading party 1's unrevealed bit.
        let bad = r#"{"n":2,"r":1,"output":"0110","backups":[{"survivors":[0],"round":0,"table":"0011"}]}"#;
        assert!(ScriptedProtocol::from_json(bad).is_err());
    }

    #[test]
    fn spec_roundtrip() {
        let s = ScriptedProtocol::from_fn(2, 2, 1, |c| c.party(0)[0] ^ c.party(1)[1])
            .unwrap()
            .with_backup_fn(vec![1], 1, |c| c.party(0)[0] ^ c.party(1)[1])
            .unwrap();
        let json = serde_json::to_string(&s.to_spec()).unwrap();
        assert_eq!(ScriptedProtocol::from_json(&json).unwrap(), s);
    }
}
