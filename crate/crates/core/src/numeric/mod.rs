//! Exact rationals and lazy binary expansions of reals in `[0, 1]`.
//!
//! Every probability in the crate is either a [`Rational`] or a [`BitStream`].
//! Bits are numbered from 1, so a stream `b_1 b_2 ...` denotes `sum b_n 2^-n`.

mod bitstream;
mod rational;

pub use bitstream::{bits_to_rational, rational_to_bitstream, truncation_sequence, BitStream, WordSource};
pub use rational::{as_string, parse_rational, pow2, pow2_recip, ratio, Rational};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("value {0} lies outside [0, 1]")]
    OutOfRange(String),
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
}
