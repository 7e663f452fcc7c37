// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::coins::CoinView;
use crate::protocol::{Party, Protocol};
use crate::transcript::Round;
use crate::ProtocolError;

/// Every party broadcasts one coin bit per round; the round coin `c_i` is the
/// XOR of the delivered bits and the output is `maj(c_1..c_r)`.
///
/// Survivors `U` after round `i` complete rounds `j > i` with the XOR of
/// their own round-`j` bits. With `tie_break` (even `r`), ties output `c_r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityCoin {
    n: usize,
    r: usize,
    tie_break: bool,
}

impl MajorityCoin {
    pub fn new(n: usize, r: usize) -> Result<Self, ProtocolError> {
        if r % 2 == 0 {
            return Err(ProtocolError::BadParams(format!("majority needs odd r, got {r}")));
        }
        Self::with_tie_break(n, r)
    }

    /// Allows even `r`, breaking ties with the last round coin.
    pub fn with_tie_break(n: usize, r: usize) -> Result<Self, ProtocolError> {
        if n < 2 || r == 0 {
            return Err(ProtocolError::BadParams(format!("majority needs n ≥ 2 and r ≥ 1, got n={n}, r={r}")));
        }
        Ok(Self { n, r, tie_break: r % 2 == 0 })
    }

    fn round_coin(round: &Round) -> bool {
        (0..round.n()).filter_map(|p| round.message(p)).fold(false, |acc, m| acc ^ (m[0] & 1 == 1))
    }

    fn decide(&self, ones: usize, last: bool) -> bool {
        if self.tie_break && 2 * ones == self.r {
            last
        } else {
            2 * ones > self.r
        }
    }

    fn completion(&self, survivors: &[Party], coins: &CoinView<'_>, j: usize) -> bool {
        survivors.iter().fold(false, |acc, &u| acc ^ coins.party(u)[j - 1])
    }

    fn prefix_state(prefix: &[Round]) -> (usize, bool) {
        prefix.iter().fold((0, false), |(ones, _), r| {
            let c = Self::round_coin(r);
            (ones + usize::from(c), c)
        })
    }
}

impl Protocol for MajorityCoin {
    fn name(&self) -> String {
        format!("majority(n={}, r={})", self.n, self.r)
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
        self.residual_outputs(&[survivors.to_vec()], coins, prefix)[0]
    }

    fn residual_outputs(&self, sets: &[Vec<Party>], coins: &CoinView<'_>, prefix: &[Round]) -> Vec<bool> {
        let i = prefix.len();
        let (ones, last) = Self::prefix_state(prefix);
        sets.iter()
            .map(|u| {
                let (mut ones, mut last) = (ones, last);
                for j in i + 1..=self.r {
                    last = self.completion(u, coins, j);
                    ones += usize::from(last);
                }
                self.decide(ones, last)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coins::Coins;
    use crate::engine::{backup_value, run_honest};
    use crate::protocols::{enumerate_coins, exact_output_probability};

    #[test]
    fn one_round_is_xor_and_unbiased() {
        let m = MajorityCoin::new(3, 1).unwrap();
        for coins in enumerate_coins(&m).unwrap() {
            let x = coins.party(0)[0] ^ coins.party(1)[0] ^ coins.party(2)[0];
            assert_eq!(run_honest(&m, &coins).unwrap().1, x);
        }
        assert_eq!(exact_output_probability(&m).unwrap(), 0.5);
    }

    #[test]
    fn fixed_coins_majority() {
        let m = MajorityCoin::new(3, 3).unwrap();
        // c = (1, 1, 0): party 0 carries every round coin.
        let coins = Coins::new(vec![vec![true, true, false], vec![false; 3], vec![false; 3]]).unwrap();
        assert!(run_honest(&m, &coins).unwrap().1);
        assert_eq!(exact_output_probability(&m).unwrap(), 0.5);
    }

    #[test]
    fn backup_of_pair_after_first_round() {
        let m = MajorityCoin::new(3, 3).unwrap();
        for coins in enumerate_coins(&m).unwrap() {
            let c1 = coins.party(0)[0] ^ coins.party(1)[0] ^ coins.party(2)[0];
            let e2 = coins.party(0)[1] ^ coins.party(1)[1];
            let e3 = coins.party(0)[2] ^ coins.party(1)[2];
            let maj = u8::from(c1) + u8::from(e2) + u8::from(e3) >= 2;
            assert_eq!(backup_value(&m, &coins, &[0, 1], 1).unwrap(), maj);
        }
    }

    #[test]
    fn singleton_backup_at_round_zero_is_uniform() {
        let m = MajorityCoin::new(3, 3).unwrap();
        let ones = enumerate_coins(&m).unwrap().filter(|c| backup_value(&m, c, &[0], 0).unwrap()).count();
        assert_eq!(ones, 1 << 8);
    }

    #[test]
    fn tie_break_variant() {
        assert!(MajorityCoin::new(3, 2).is_err());
        let m = MajorityCoin::with_tie_break(2, 2).unwrap();
        assert_eq!(exact_output_probability(&m).unwrap(), 0.5);
    }

    #[test]
    fn batched_matches_single() {
        let m = MajorityCoin::new(4, 5).unwrap();
        let coins = Coins::from_index(4, 5, 0xABCDE);
        let (t, _) = run_honest(&m, &coins).unwrap();
        let sets = vec![vec![0], vec![1, 3], vec![0, 1, 2, 3], vec![]];
        for i in 0..=5 {
            let batch = m.residual_outputs(&sets, &coins.view_all(), t.prefix(i));
            for (s, b) in sets.iter().zip(batch) {
                assert_eq!(m.residual_output(s, &coins.view(s), t.prefix(i)), b);
            }
        }
    }
}
