//! Oracle sets as coin biases.
//!
//! A set `X` of positive integers is encoded as the real `p_X` whose `n`-th
//! bit is 1 exactly when `n ∈ X`. A coin with that bias answers membership
//! queries once its expansion has been extracted far enough.
//!
//! The guarded layout puts membership bits at even positions and the fixed
//! pattern 0,1 (positions `4m+1` and `4m+3`) at odd ones, so the encoding is
//! never dyadic, even for finite sets.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitextract::{extract_stream, StreamEnd, StreamExtractor};
use crate::coinlab::{CoinSource, ExactCoin, Seed};
use crate::numeric::BitStream;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("unknown set fixture {0:?}")]
    UnknownFixture(String),
    #[error("oracle sets range over positive integers; 0 was queried")]
    ZeroQuery,
    #[error("{0} has a dyadic direct encoding and cannot be read from a coin")]
    DyadicEncoding(String),
    #[error("oracle unavailable for n={n}: extraction stopped before bit {position} ({reason})")]
    Unavailable { n: u64, position: u64, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMode {
    Direct,
    #[default]
    Guarded,
}

impl fmt::Display for EncodingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncodingMode::Direct => "direct",
            EncodingMode::Guarded => "guarded",
        })
    }
}

impl FromStr for EncodingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(EncodingMode::Direct),
            "guarded" => Ok(EncodingMode::Guarded),
            other => Err(format!("unknown encoding mode {other:?}")),
        }
    }
}

/// Bit position holding the membership of `n`.
pub fn data_position(n: u64, mode: EncodingMode) -> u64 {
    match mode {
        EncodingMode::Direct => n,
        EncodingMode::Guarded => 2 * n,
    }
}

/// A decidable set of positive integers.
#[derive(Clone)]
pub struct OracleSet {
    description: String,
    membership: Arc<dyn Fn(u64) -> bool + Send + Sync>,
    finite_max: Option<u64>,
}

impl fmt::Debug for OracleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("OracleSet").field(&self.description).finish()
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl OracleSet {
    pub fn from_predicate<F>(description: impl Into<String>, membership: F) -> Self
    where
        F: Fn(u64) -> bool + Send + Sync + 'static,
    {
        OracleSet { description: description.into(), membership: Arc::new(membership), finite_max: None }
    }

    pub fn evens() -> Self {
        Self::from_predicate("evens", |n| n % 2 == 0)
    }

    pub fn odds() -> Self {
        Self::from_predicate("odds", |n| n % 2 == 1)
    }

    pub fn primes() -> Self {
        Self::from_predicate("primes", is_prime)
    }

    pub fn multiples(d: u64) -> Self {
        assert!(d > 0);
        Self::from_predicate(format!("multiples:{d}"), move |n| n % d == 0)
    }

    pub fn finite(members: impl IntoIterator<Item = u64>) -> Self {
        let mut members: Vec<u64> = members.into_iter().filter(|&n| n > 0).collect();
        members.sort_unstable();
        members.dedup();
        let description = format!("finite:{}", members.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
        let finite_max = Some(members.last().copied().unwrap_or(0));
        OracleSet { description, membership: Arc::new(move |n| members.binary_search(&n).is_ok()), finite_max }
    }

    /// Fixture names: `evens`, `odds`, `primes`, `multiples:<d>`, `finite:<csv>`.
    pub fn parse(name: &str) -> Result<Self, OracleError> {
        let unknown = || OracleError::UnknownFixture(name.to_string());
        match name {
            "evens" => return Ok(Self::evens()),
            "odds" => return Ok(Self::odds()),
            "primes" => return Ok(Self::primes()),
            _ => {}
        }
        if let Some(d) = name.strip_prefix("multiples:") {
            let d: u64 = d.parse().map_err(|_| unknown())?;
            if d == 0 {
                return Err(unknown());
            }
            return Ok(Self::multiples(d));
        }
        if let Some(csv) = name.strip_prefix("finite:") {
            let members = csv
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<u64>().ok().filter(|&n| n > 0))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(unknown)?;
            return Ok(Self::finite(members));
        }
        Err(unknown())
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn contains(&self, n: u64) -> bool {
        n > 0 && (self.membership)(n)
    }

    /// Largest member, when the set is known to be finite.
    pub fn finite_max(&self) -> Option<u64> {
        self.finite_max
    }
}

/// The stream of `p_X` in the given layout.
pub fn encode_set(set: &OracleSet, mode: EncodingMode) -> BitStream {
    let membership = set.membership.clone();
    let label = format!("p[{}:{mode}]", set.description);
    match mode {
        EncodingMode::Direct => BitStream::from_predicate(label, move |n| membership(n)),
        EncodingMode::Guarded => BitStream::from_predicate(label, move |n| match n % 4 {
            0 | 2 => membership(n / 2),
            1 => false,
            _ => true,
        }),
    }
}

/// Membership of `n` read straight off an encoding, without any coin.
pub fn decode_bits(stream: &BitStream, n: u64, mode: EncodingMode) -> bool {
    assert!(n > 0);
    stream.bit(data_position(n, mode)) == 1
}

/// Anything that answers "is `n` in X?".
pub trait MembershipOracle {
    fn answer(&self, n: u64) -> Result<bool, OracleError>;

    /// Coin tosses spent so far answering queries.
    fn tosses_total(&self) -> u64 {
        0
    }
}

impl MembershipOracle for OracleSet {
    fn answer(&self, n: u64) -> Result<bool, OracleError> {
        if n == 0 {
            return Err(OracleError::ZeroQuery);
        }
        Ok(self.contains(n))
    }
}

/// Answers membership queries from a coin by extracting its bias's expansion
/// on demand. One extraction at confidence `j` backs every query, and each
/// bit is extracted once.
///
/// Readers needing an already-emitted bit only take the shared read lock on
/// the answered prefix; a reader needing a later bit drives the extraction
/// while holding the writer lock, and other such readers wait on it.
pub struct CoinOracle {
    mode: EncodingMode,
    extractor: Mutex<StreamExtractor<Box<dyn CoinSource>>>,
    answered: RwLock<Vec<u8>>,
}

impl fmt::Debug for CoinOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoinOracle").field("mode", &self.mode).field("answered", &self.answered_prefix()).finish()
    }
}

impl CoinOracle {
    pub fn new(coin: Box<dyn CoinSource>, j: u32, mode: EncodingMode, toss_budget: u64) -> Self {
        CoinOracle {
            mode,
            extractor: Mutex::new(extract_stream(coin, j, toss_budget)),
            answered: RwLock::new(Vec::new()),
        }
    }

    /// Oracle backed by an exact coin of bias `p_X`. Refuses direct encodings
    /// of known-finite sets, which are dyadic.
    pub fn for_set(
        set: &OracleSet,
        mode: EncodingMode,
        j: u32,
        seed: Seed,
        toss_budget: u64,
    ) -> Result<Self, OracleError> {
        if mode == EncodingMode::Direct && set.finite_max().is_some() {
            return Err(OracleError::DyadicEncoding(set.description().to_string()));
        }
        let coin = ExactCoin::new(encode_set(set, mode), seed);
        Ok(Self::new(Box::new(coin), j, mode, toss_budget))
    }

    pub fn mode(&self) -> EncodingMode {
        self.mode
    }

    pub fn j(&self) -> u32 {
        self.extractor.lock().expect("extractor poisoned").j()
    }

    /// Bits emitted so far.
    pub fn answered_prefix(&self) -> Vec<u8> {
        self.answered.read().expect("answer cache poisoned").clone()
    }

    pub fn decode_query(&self, n: u64) -> Result<bool, OracleError> {
        if n == 0 {
            return Err(OracleError::ZeroQuery);
        }
        let position = data_position(n, self.mode);
        if let Some(&bit) = self.answered.read().expect("answer cache poisoned").get((position - 1) as usize) {
            return Ok(bit == 1);
        }
        let mut extractor = self.extractor.lock().expect("extractor poisoned");
        let result = extractor.ensure(position);
        {
            let mut answered = self.answered.write().expect("answer cache poisoned");
            let have = answered.len();
            answered.extend(extractor.emitted()[have..].iter().map(|b| b.bit));
        }
        match result {
            Some(bit) => Ok(bit == 1),
            None => {
                let reason = match extractor.end() {
                    Some(StreamEnd::BudgetExhausted { tosses_total, .. }) => {
                        format!("toss budget exhausted after {tosses_total} tosses")
                    }
                    Some(StreamEnd::CoinFailure(e)) => e.clone(),
                    None => "stream ended".to_string(),
                };
                Err(OracleError::Unavailable { n, position, reason })
            }
        }
    }
}

/// Free-function form of [`CoinOracle::decode_query`].
pub fn decode_query(oracle: &CoinOracle, n: u64) -> Result<bool, OracleError> {
    oracle.decode_query(n)
}

impl MembershipOracle for CoinOracle {
    fn answer(&self, n: u64) -> Result<bool, OracleError> {
        self.decode_query(n)
    }

    fn tosses_total(&self) -> u64 {
        self.extractor.lock().expect("extractor poisoned").tosses_total()
    }
}
