//! Biased coins as oracles.
//!
//! Coins with exact, converging, or randomly drawn biases; estimators that
//! recover a bias to a given accuracy and confidence; extraction of the bias's
//! binary expansion; sets encoded as biases and read back as oracles for
//! simulated oracle machines; and a harness that checks the probability
//! guarantees by repeated seeded trials.

pub mod bitextract;
pub mod coinlab;
pub mod estimator;
pub mod harness;
pub mod machines;
pub mod numeric;
pub mod oracle;

pub use coinlab::{CoinSource, FlipOutcome, Seed, SourceKind};
pub use numeric::Rational;
