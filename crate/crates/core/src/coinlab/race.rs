//! Exact Bernoulli sampling against a lazy binary expansion.
//!
//! A flip draws uniform bits `u_1, u_2, ...` and stops at the first `i` with
//! `u_i != b_i`; it is heads when `u_i < b_i`. This compares a uniform real
//! with the bias, so heads has probability exactly equal to the bias.

use num_traits::{One, Zero};

use super::rng::RandomBits;
use super::FlipError;
use crate::numeric::BitStream;

/// Default number of consecutive tied bits after which a flip is abandoned.
pub const DEFAULT_TIE_CAP: u32 = 1024;

/// A bias prepared for racing: the stream, its first word cached, and the
/// degenerate cases 0 and 1 resolved without drawing bits.
#[derive(Debug, Clone)]
pub struct RaceBias {
    stream: BitStream,
    head: u64,
    fixed: Option<bool>,
}

impl RaceBias {
    pub fn new(stream: BitStream) -> Self {
        let fixed = stream.exact_value().and_then(|v| {
            if v.is_zero() {
                Some(false)
            } else if v.is_one() {
                Some(true)
            } else {
                None
            }
        });
        let head = stream.word(0);
        RaceBias { stream, head, fixed }
    }

    pub fn stream(&self) -> &BitStream {
        &self.stream
    }

    #[inline]
    fn bit(&self, level: u32) -> u8 {
        if level <= 64 {
            ((self.head >> (64 - level)) & 1) as u8
        } else {
            self.stream.bit(u64::from(level))
        }
    }
}

/// One flip. `Ok(true)` is heads.
pub fn race_once(bits: &mut RandomBits, bias: &RaceBias, cap: u32) -> Result<bool, FlipError> {
    if let Some(fixed) = bias.fixed {
        return Ok(fixed);
    }
    race_from(bits, 1, cap, |level| bias.bit(level))
}

/// Continues a race at `level`, reading bias bits from `bias_bit`.
pub(crate) fn race_from<F>(bits: &mut RandomBits, mut level: u32, cap: u32, bias_bit: F) -> Result<bool, FlipError>
where
    F: Fn(u32) -> u8,
{
    while level <= cap {
        let u = bits.next_bit();
        let b = bias_bit(level);
        if u != b {
            return Ok(u < b);
        }
        level += 1;
    }
    Err(FlipError::MeasureZeroCap { cap })
}

/// Result of racing many flips level by level.
pub(crate) struct LevelRace {
    pub heads: u64,
    /// Flips still tied after the last level that was run.
    pub survivors: u64,
}

/// Runs the race for `active` identically-biased flips at once over levels
/// `1..=last_level`.
///
/// At each level every live flip draws one fresh bit, so the number that
/// leave the tie is a popcount of that many uniform bits. Those leaving at a
/// level where the bias bit is 1 are heads. Random-bit consumption matches
/// running the flips one after another.
pub(crate) fn race_levels<F>(bits: &mut RandomBits, mut active: u64, last_level: u32, bias_bit: F) -> LevelRace
where
    F: Fn(u32) -> u8,
{
    let mut heads = 0;
    let mut level = 1;
    while active > 0 && level <= last_level {
        let ones = bits.count_ones(active);
        let b = bias_bit(level);
        let decided = if b == 1 { active - ones } else { ones };
        if b == 1 {
            heads += decided;
        }
        active -= decided;
        level += 1;
    }
    LevelRace { heads, survivors: active }
}

/// Number of heads in `n` independent flips at `bias`.
pub fn race_many(bits: &mut RandomBits, bias: &RaceBias, n: u64, cap: u32) -> Result<u64, FlipError> {
    match bias.fixed {
        Some(true) => return Ok(n),
        Some(false) => return Ok(0),
        None => {}
    }
    let run = race_levels(bits, n, cap, |level| bias.bit(level));
    if run.survivors > 0 {
        return Err(FlipError::MeasureZeroCap { cap });
    }
    Ok(run.heads)
}
