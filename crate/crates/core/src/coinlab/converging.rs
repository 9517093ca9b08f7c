use std::collections::BTreeSet;

use super::race::{race_from, race_levels, race_once, RaceBias, DEFAULT_TIE_CAP};
use super::rng::{RandomBits, Seed};
use super::{CoinSource, FlipError, FlipOutcome, SourceKind};
use crate::numeric::{rational_to_bitstream, truncation_sequence, BitStream, Rational};

/// Tosses below this index are raced one at a time; from here on a batch
/// shares at least 65 leading bias bits.
const BATCH_FROM_INDEX: u64 = 64;

enum BiasSequence {
    /// `p_n` is `p` truncated to `n + 1` bits.
    Truncations(BitStream),
    Explicit(Box<dyn Fn(u64) -> Rational + Send>),
}

/// A succession of coins where toss `n` (from 1) lands heads with
/// probability `p_n`.
pub struct ConvergingCoin {
    sequence: BiasSequence,
    bits: RandomBits,
    toss_index: u64,
    tie_cap: u32,
    batch_from: u64,
}

/// Coin whose biases are the truncations of `p`, so `|p_n - p| < 2^-n`.
pub fn converging_from_target(p: BitStream, seed: Seed) -> ConvergingCoin {
    ConvergingCoin::with_sequence(BiasSequence::Truncations(p), seed.bits())
}

impl ConvergingCoin {
    /// Coin with an arbitrary bias sequence. Each `p_n` must lie in `[0, 1]`.
    pub fn from_sequence<F>(sequence: F, seed: Seed) -> Self
    where
        F: Fn(u64) -> Rational + Send + 'static,
    {
        Self::with_sequence(BiasSequence::Explicit(Box::new(sequence)), seed.bits())
    }

    fn with_sequence(sequence: BiasSequence, bits: RandomBits) -> Self {
        ConvergingCoin { sequence, bits, toss_index: 0, tie_cap: DEFAULT_TIE_CAP, batch_from: BATCH_FROM_INDEX }
    }

    pub fn with_bits(mut self, bits: RandomBits) -> Self {
        self.bits = bits;
        self
    }

    pub fn with_tie_cap(mut self, cap: u32) -> Self {
        self.tie_cap = cap;
        self
    }

    #[cfg(test)]
    fn with_batch_from(mut self, index: u64) -> Self {
        self.batch_from = index.max(1);
        self
    }

    /// Index of the next toss (from 1).
    pub fn next_toss_index(&self) -> u64 {
        self.toss_index + 1
    }

    /// The bias `p_n` used by toss `n`.
    pub fn bias_at(&self, n: u64) -> Rational {
        assert!(n >= 1, "tosses are numbered from 1");
        match &self.sequence {
            BiasSequence::Truncations(p) => truncation_sequence(p, n),
            BiasSequence::Explicit(f) => f(n),
        }
    }

    fn race_toss(&mut self, n: u64, from_level: u32) -> Result<bool, FlipError> {
        match &self.sequence {
            BiasSequence::Truncations(p) => {
                let p = p.clone();
                race_from(&mut self.bits, from_level, self.tie_cap, |level| truncated_bit(&p, n, level))
            }
            BiasSequence::Explicit(f) => {
                debug_assert_eq!(from_level, 1);
                let stream = rational_to_bitstream(&f(n)).expect("bias sequence value outside [0, 1]");
                race_once(&mut self.bits, &RaceBias::new(stream), self.tie_cap)
            }
        }
    }
}

#[inline]
fn truncated_bit(p: &BitStream, n: u64, level: u32) -> u8 {
    if u64::from(level) <= n + 1 {
        p.bit(u64::from(level))
    } else {
        0
    }
}

impl CoinSource for ConvergingCoin {
    fn flip(&mut self) -> Result<FlipOutcome, FlipError> {
        let n = self.toss_index + 1;
        let heads = self.race_toss(n, 1)?;
        self.toss_index = n;
        Ok(FlipOutcome::from_heads(heads))
    }

    fn count_heads(&mut self, count: u64) -> Result<u64, FlipError> {
        let target = match &self.sequence {
            BiasSequence::Truncations(p) => p.clone(),
            BiasSequence::Explicit(_) => {
                let mut heads = 0;
                for _ in 0..count {
                    heads += u64::from(self.flip()?.z());
                }
                return Ok(heads);
            }
        };
        let mut heads = 0;
        let mut remaining = count;
        while remaining > 0 && self.toss_index + 1 < self.batch_from {
            heads += u64::from(self.flip()?.z());
            remaining -= 1;
        }
        if remaining == 0 {
            return Ok(heads);
        }

        // Tosses start..start+remaining all share the first start+1 bias bits,
        // so those levels can be raced together. The flips are exchangeable
        // there, so the survivors are a uniformly random subset of the batch.
        let start = self.toss_index + 1;
        let shared_levels = u32::try_from(start + 1).unwrap_or(u32::MAX).min(self.tie_cap);
        let run = race_levels(&mut self.bits, remaining, shared_levels, |level| target.bit(u64::from(level)));
        heads += run.heads;
        if run.survivors > 0 {
            let mut offsets = BTreeSet::new();
            while (offsets.len() as u64) < run.survivors {
                offsets.insert(self.bits.below(remaining));
            }
            for offset in offsets {
                let n = start + offset;
                heads += u64::from(self.race_toss(n, shared_levels + 1)?);
            }
        }
        self.toss_index += remaining;
        Ok(heads)
    }

    fn kind(&self) -> SourceKind {
        SourceKind::Converging
    }

    fn flips_taken(&self) -> u64 {
        self.toss_index
    }

    fn random_bits_consumed(&self) -> u64 {
        self.bits.consumed()
    }
}
