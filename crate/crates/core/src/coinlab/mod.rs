//! Coin sources behind one flip interface.
//!
//! * [`ExactCoin`] flips at a fixed bias given as a [`BitStream`].
//! * [`ConvergingCoin`] uses bias `p_n` on its `n`-th toss.
//! * [`MixtureCoin`] draws a fresh bias from a distribution before each toss.
//!
//! Callers only see outcomes. Nothing outside this module reads bias bits.

mod converging;
mod exact;
mod mixture;
mod race;
mod rng;
mod spec;

pub use converging::{converging_from_target, ConvergingCoin};
pub use exact::ExactCoin;
pub use mixture::{mixture_mean, MixtureCoin, MixtureDistribution};
pub use race::{race_many, race_once, RaceBias, DEFAULT_TIE_CAP};
pub use rng::{RandomBits, Seed};
pub use spec::{BiasSpec, CoinConfig, CoinSpec, CoinSpecError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlipOutcome {
    Heads,
    Tails,
}

impl FlipOutcome {
    pub fn from_heads(heads: bool) -> Self {
        if heads {
            FlipOutcome::Heads
        } else {
            FlipOutcome::Tails
        }
    }

    /// `z`: 1 for heads, 0 for tails.
    pub fn z(self) -> u8 {
        match self {
            FlipOutcome::Heads => 1,
            FlipOutcome::Tails => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Exact,
    Converging,
    Mixture,
}

impl std::fmt::Display for SourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SourceKind::Exact => "exact",
            SourceKind::Converging => "converging",
            SourceKind::Mixture => "mixture",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlipError {
    /// The uniform draw matched the bias on `cap` consecutive bits, an event
    /// of probability `2^-cap`.
    #[error("bit race tied on {cap} consecutive bits (measure-zero cap)")]
    MeasureZeroCap { cap: u32 },
}

/// Anything that can be tossed.
pub trait CoinSource: Send {
    fn flip(&mut self) -> Result<FlipOutcome, FlipError>;

    /// Heads among the next `n` tosses. Implementations may batch, but the
    /// count must have the same distribution as `n` calls to [`flip`].
    ///
    /// [`flip`]: CoinSource::flip
    fn count_heads(&mut self, n: u64) -> Result<u64, FlipError> {
        let mut heads = 0;
        for _ in 0..n {
            heads += u64::from(self.flip()?.z());
        }
        Ok(heads)
    }

    fn kind(&self) -> SourceKind;

    fn flips_taken(&self) -> u64;

    fn random_bits_consumed(&self) -> u64;
}

impl<C: CoinSource + ?Sized> CoinSource for Box<C> {
    fn flip(&mut self) -> Result<FlipOutcome, FlipError> {
        (**self).flip()
    }
    fn count_heads(&mut self, n: u64) -> Result<u64, FlipError> {
        (**self).count_heads(n)
    }
    fn kind(&self) -> SourceKind {
        (**self).kind()
    }
    fn flips_taken(&self) -> u64 {
        (**self).flips_taken()
    }
    fn random_bits_consumed(&self) -> u64 {
        (**self).random_bits_consumed()
    }
}
