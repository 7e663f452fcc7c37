// SPDX-License-Identifier: Apache-2.0

use crate::coins::CoinView;
use crate::transcript::Round;

pub type Party = usize;

/// An `n`-party `r`-round protocol given as a deterministic function of
/// pre-sampled coins.
///
/// Implementations must be pure: every method is a function of its arguments.
/// Messages are opaque to the engine.
pub trait Protocol: Send + Sync {
    fn name(&self) -> String;

    fn n(&self) -> usize;

    fn rounds(&self) -> usize;

    /// Coin bits per party.
    fn coin_len(&self) -> usize;

    /// Message of `party` in round `round ∈ 1..=r`, given rounds `1..round`.
    fn next_message(&self, party: Party, round: usize, own_coins: &[bool], prefix: &[Round]) -> Vec<u8>;

    /// Common output of `survivors` when everyone else aborts right after the
    /// last round in `prefix`. `coins` must only be read for survivors.
    fn residual_output(&self, survivors: &[Party], coins: &CoinView<'_>, prefix: &[Round]) -> bool;

    /// Residual outputs for many survivor sets on one prefix.
    fn residual_outputs(&self, sets: &[Vec<Party>], coins: &CoinView<'_>, prefix: &[Round]) -> Vec<bool> {
        sets.iter().map(|u| self.residual_output(u, coins, prefix)).collect()
    }

    /// `n · coin_len`, the number of coin bits of one execution.
    fn coin_bits(&self) -> usize {
        self.n() * self.coin_len()
    }
}

impl<P: Protocol + ?Sized> Protocol for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn n(&self) -> usize {
        (**self).n()
    }
    fn rounds(&self) -> usize {
        (**self).rounds()
    }
    fn coin_len(&self) -> usize {
        (**self).coin_len()
    }
    fn next_message(&self, party: Party, round: usize, own_coins: &[bool], prefix: &[Round]) -> Vec<u8> {
        (**self).next_message(party, round, own_coins, prefix)
    }
    fn residual_output(&self, survivors: &[Party], coins: &CoinView<'_>, prefix: &[Round]) -> bool {
        (**self).residual_output(survivors, coins, prefix)
    }
    fn residual_outputs(&self, sets: &[Vec<Party>], coins: &CoinView<'_>, prefix: &[Round]) -> Vec<bool> {
        (**self).residual_outputs(sets, coins, prefix)
    }
}

impl<P: Protocol + ?Sized> Protocol for std::sync::Arc<P> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn n(&self) -> usize {
        (**self).n()
    }
    fn rounds(&self) -> usize {
        (**self).rounds()
    }
    fn coin_len(&self) -> usize {
        (**self).coin_len()
    }
    fn next_message(&self, party: Party, round: usize, own_coins: &[bool], prefix: &[Round]) -> Vec<u8> {
        (**self).next_message(party, round, own_coins, prefix)
    }
    fn residual_output(&self, survivors: &[Party], coins: &CoinView<'_>, prefix: &[Round]) -> bool {
        (**self).residual_output(survivors, coins, prefix)
    }
    fn residual_outputs(&self, sets: &[Vec<Party>], coins: &CoinView<'_>, prefix: &[Round]) -> Vec<bool> {
        (**self).residual_outputs(sets, coins, prefix)
    }
}
