// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::coins::CoinView;
use crate::protocol::{Party, Protocol};
use crate::transcript::Round;
use crate::ProtocolError;

/// Every party broadcasts one bit per round; the output is the XOR of all
/// bits. Survivors complete the missing rounds with their own bits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityProtocol {
    n: usize,
    r: usize,
}

impl ParityProtocol {
    pub fn new(n: usize, r: usize) -> Result<Self, ProtocolError> {
        if n < 2 || r == 0 {
            return Err(ProtocolError::BadParams(format!("parity needs n ≥ 2 and r ≥ 1, got n={n}, r={r}")));
        }
        Ok(Self { n, r })
    }
}

impl Protocol for ParityProtocol {
    fn name(&self) -> String {
        format!("parity(n={}, r={})", self.n, self.r)
    }

    fn n(&self) -> usize {
        self.n
    }

    fn rounds(&self) -> usize {
        self.r
    }

    fn coin_len(&self) -> usize {
        self.r
    }

    fn next_message(&self, _party: Party, round: usize, own_coins: &[bool], _prefix: &[Round]) -> Vec<u8> {
        vec![u8::from(own_coins[round - 1])]
    }

    fn residual_output(&self, survivors: &[Party], coins: &CoinView<'_>, prefix: &[Round]) -> bool {
        let delivered = prefix
            .iter()
            .flat_map(|r| (0..r.n()).filter_map(move |p| r.message(p)))
            .fold(false, |acc, m| acc ^ (m[0] & 1 == 1));
        let own = survivors
            .iter()
            .flat_map(|&u| coins.party(u)[prefix.len()..].iter())
            .fold(false, |acc, &b| acc ^ b);
        delivered ^ own
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coins::Coins;
    use crate::engine::run_honest;
    use crate::protocols::exact_output_probability;

    #[test]
    fn zero_coins_give_zero() {
        let p = ParityProtocol::new(3, 1).unwrap();
        assert!(!run_honest(&p, &Coins::zeros(3, 1)).unwrap().1);
        assert_eq!(exact_output_probability(&p).unwrap(), 0.5);
    }
}
