// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::coins::CoinView;
use crate::protocol::{Party, Protocol};
use crate::transcript::Round;
use crate::ProtocolError;

/// Outputs a fixed bit; every backup value equals it. Not a correct
/// coin-flipping protocol, used as an attack-free baseline.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantProtocol {
    n: usize,
    r: usize,
    bit: bool,
}

impl ConstantProtocol {
    pub fn new(n: usize, r: usize, bit: bool) -> Result<Self, ProtocolError> {
        if n < 2 || r == 0 {
            return Err(ProtocolError::BadParams(format!("constant needs n ≥ 2 and r ≥ 1, got n={n}, r={r}")));
        }
        Ok(Self { n, r, bit })
    }
}

impl Protocol for ConstantProtocol {
    fn name(&self) -> String {
        format!("constant(n={}, r={}, bit={})", self.n, self.r, u8::from(self.bit))
    }

    fn n(&self) -> usize {
        self.n
    }

    fn rounds(&self) -> usize {
        self.r
    }

    fn coin_len(&self) -> usize {
        1
    }

    fn next_message(&self, _: Party, _: usize, _: &[bool], _: &[Round]) -> Vec<u8> {
        Vec::new()
    }

    fn residual_output(&self, _: &[Party], _: &CoinView<'_>, _: &[Round]) -> bool {
        self.bit
    }
}
