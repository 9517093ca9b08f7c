use super::race::{race_many, race_once, RaceBias, DEFAULT_TIE_CAP};
use super::rng::{RandomBits, Seed};
use super::{CoinSource, FlipError, FlipOutcome, SourceKind};
use crate::numeric::BitStream;

/// Coin landing heads with probability exactly equal to its bias stream.
pub struct ExactCoin {
    bias: RaceBias,
    bits: RandomBits,
    flips_taken: u64,
    tie_cap: u32,
}

impl ExactCoin {
    pub fn new(bias: BitStream, seed: Seed) -> Self {
        Self::with_bits(bias, seed.bits())
    }

    pub fn with_bits(bias: BitStream, bits: RandomBits) -> Self {
        ExactCoin { bias: RaceBias::new(bias), bits, flips_taken: 0, tie_cap: DEFAULT_TIE_CAP }
    }

    pub fn with_tie_cap(mut self, cap: u32) -> Self {
        self.tie_cap = cap;
        self
    }
}

impl CoinSource for ExactCoin {
    fn flip(&mut self) -> Result<FlipOutcome, FlipError> {
        let heads = race_once(&mut self.bits, &self.bias, self.tie_cap)?;
        self.flips_taken += 1;
        Ok(FlipOutcome::from_heads(heads))
    }

    fn count_heads(&mut self, n: u64) -> Result<u64, FlipError> {
        let heads = race_many(&mut self.bits, &self.bias, n, self.tie_cap)?;
        self.flips_taken += n;
        Ok(heads)
    }

    fn kind(&self) -> SourceKind {
        SourceKind::Exact
    }

    fn flips_taken(&self) -> u64 {
        self.flips_taken
    }

    fn random_bits_consumed(&self) -> u64 {
        self.bits.consumed()
    }
}
