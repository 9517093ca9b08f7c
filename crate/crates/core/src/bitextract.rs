//! Reading the binary expansion of a coin's bias.
//!
//! Taking bit `l` of a single estimate fails near runs of equal bits, so the
//! estimate `p_k` is refined (`k = l+1, l+2, ...`) until it is below 1 and its
//! bits strictly between positions `l` and `k` contain both a 0 and a 1. Then
//! any value within `2^-k` of `p_k` shares its first `l` bits, and since the
//! bias is within `2^-k` whenever the estimate sequence converges quickly, the
//! bit is correct with probability above `1 - 2^-j`.
//!
//! The streaming form shares one loop over `k` and emits bit `l` as soon as
//! bits `1..l` are out and the current estimate passes the test for `l`.
//!
//! Dyadic biases never pass the test in the limit, so budgets are counted in
//! tosses and exhaustion is a normal outcome.

use num_bigint::BigUint;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::coinlab::{CoinSource, FlipError};
use crate::estimator::{frequency_estimate, sequence_sample_count, AccuracySpec};
use crate::numeric::{as_string, rational_to_bitstream, truncation_sequence, BitStream, Rational};

/// Default toss budget for one extraction.
pub const DEFAULT_EXTRACTION_BUDGET: u64 = 1 << 30;

/// Supplier of the approximations `p_1, p_2, ...`.
pub trait ApproximationSource {
    /// Tosses approximation `k` costs at confidence `j`.
    fn cost(&self, j: u32, k: u32) -> BigUint;

    fn approximate(&mut self, j: u32, k: u32, tosses: u64) -> Result<Rational, FlipError>;
}

impl<C: CoinSource + ?Sized> ApproximationSource for C {
    fn cost(&self, j: u32, k: u32) -> BigUint {
        sequence_sample_count(AccuracySpec { j, k }, self.kind())
    }

    fn approximate(&mut self, j: u32, k: u32, tosses: u64) -> Result<Rational, FlipError> {
        match frequency_estimate(self, tosses, AccuracySpec { j, k }) {
            Ok(estimate) => Ok(estimate.value),
            Err(crate::estimator::EstimateError::Flip(e)) => Err(e),
            Err(other) => unreachable!("frequency estimate cannot fail with {other}"),
        }
    }
}

/// Ideal approximations: `p_k` is the truncation of a known stream, which
/// always converges quickly. Costs no tosses; used to study the halting rule.
pub struct PerfectApproximations(pub BitStream);

impl ApproximationSource for PerfectApproximations {
    fn cost(&self, _j: u32, _k: u32) -> BigUint {
        BigUint::from(0u32)
    }

    fn approximate(&mut self, _j: u32, k: u32, _tosses: u64) -> Result<Rational, FlipError> {
        Ok(truncation_sequence(&self.0, u64::from(k)))
    }
}

/// Bit `l` of `p_hat` if `p_hat < 1` and bits `l+1 ..= k-1` of its expansion
/// contain both values; `None` otherwise.
pub fn run_condition(p_hat: &Rational, l: u64, k: u32) -> Option<u8> {
    let k = u64::from(k);
    if k < l + 3 || p_hat.is_negative() || *p_hat >= Rational::one() {
        return None;
    }
    let bits = rational_to_bitstream(p_hat).ok()?.prefix(k - 1);
    let guard = &bits[l as usize..];
    if guard.contains(&0) && guard.contains(&1) {
        Some(bits[(l - 1) as usize])
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionOutcome {
    Bit(u8),
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitQuery {
    pub l: u64,
    pub j: u32,
    pub toss_budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionTrace {
    pub k_final: u32,
    #[serde(with = "as_string")]
    pub p_hat_final: Rational,
    pub tosses_total: u64,
    pub outcome: ExtractionOutcome,
}

/// Single-bit extraction: bit `l` of the bias, correct with probability above
/// `1 - 2^-j` for non-dyadic biases.
pub fn extract_bit<A: ApproximationSource + ?Sized>(
    source: &mut A,
    query: &BitQuery,
) -> Result<ExtractionTrace, FlipError> {
    assert!(query.l >= 1 && query.j >= 1, "l and j start at 1");
    let budget = query.toss_budget.unwrap_or(DEFAULT_EXTRACTION_BUDGET);
    let mut trace = ExtractionTrace {
        k_final: 0,
        p_hat_final: Rational::default(),
        tosses_total: 0,
        outcome: ExtractionOutcome::BudgetExhausted,
    };
    let Ok(mut k) = u32::try_from(query.l) else {
        return Ok(trace);
    };
    loop {
        k += 1;
        let Some(tosses) = affordable(&source.cost(query.j, k), trace.tosses_total, budget) else {
            return Ok(trace);
        };
        let p_hat = source.approximate(query.j, k, tosses)?;
        trace.tosses_total += tosses;
        trace.k_final = k;
        let bit = run_condition(&p_hat, query.l, k);
        trace.p_hat_final = p_hat;
        if let Some(bit) = bit {
            trace.outcome = ExtractionOutcome::Bit(bit);
            return Ok(trace);
        }
    }
}

fn affordable(cost: &BigUint, spent: u64, budget: u64) -> Option<u64> {
    let cost = u64::try_from(cost).ok()?;
    (cost <= budget.checked_sub(spent)?).then_some(cost)
}

/// A bit emitted by the stream along with the estimate that justified it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmittedBit {
    pub index: u64,
    pub bit: u8,
    pub k: u32,
    #[serde(with = "as_string")]
    pub p_hat: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamEnd {
    BudgetExhausted { k_reached: u32, tosses_total: u64 },
    CoinFailure(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamItem {
    Bit(EmittedBit),
    End(StreamEnd),
}

/// Streaming extraction of the whole expansion.
pub struct StreamExtractor<A> {
    source: A,
    j: u32,
    budget: u64,
    k: u32,
    tosses_total: u64,
    emitted: Vec<EmittedBit>,
    end: Option<StreamEnd>,
    yielded: usize,
    end_yielded: bool,
}

pub fn extract_stream<A: ApproximationSource>(source: A, j: u32, budget: u64) -> StreamExtractor<A> {
    assert!(j >= 1, "j starts at 1");
    StreamExtractor {
        source,
        j,
        budget,
        k: 0,
        tosses_total: 0,
        emitted: Vec::new(),
        end: None,
        yielded: 0,
        end_yielded: false,
    }
}

impl<A: ApproximationSource> StreamExtractor<A> {
    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn tosses_total(&self) -> u64 {
        self.tosses_total
    }

    /// Last round computed.
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn emitted(&self) -> &[EmittedBit] {
        &self.emitted
    }

    pub fn end(&self) -> Option<&StreamEnd> {
        self.end.as_ref()
    }

    pub fn source(&self) -> &A {
        &self.source
    }

    /// Computes the next approximation and emits every bit it settles.
    /// Returns `false` once the stream has ended.
    pub fn advance_round(&mut self) -> bool {
        if self.end.is_some() {
            return false;
        }
        let k = self.k + 1;
        let Some(tosses) = affordable(&self.source.cost(self.j, k), self.tosses_total, self.budget) else {
            self.end = Some(StreamEnd::BudgetExhausted { k_reached: self.k, tosses_total: self.tosses_total });
            return false;
        };
        let p_hat = match self.source.approximate(self.j, k, tosses) {
            Ok(p) => p,
            Err(e) => {
                self.end = Some(StreamEnd::CoinFailure(e.to_string()));
                return false;
            }
        };
        self.k = k;
        self.tosses_total += tosses;
        loop {
            let index = self.emitted.len() as u64 + 1;
            match run_condition(&p_hat, index, k) {
                Some(bit) => self.emitted.push(EmittedBit { index, bit, k, p_hat: p_hat.clone() }),
                None => break,
            }
        }
        true
    }

    /// Runs rounds until bit `index` is out. `None` if the stream ends first.
    pub fn ensure(&mut self, index: u64) -> Option<u8> {
        while (self.emitted.len() as u64) < index {
            if !self.advance_round() {
                return None;
            }
        }
        Some(self.emitted[(index - 1) as usize].bit)
    }
}

impl<A: ApproximationSource> Iterator for StreamExtractor<A> {
    type Item = StreamItem;

    fn next(&mut self) -> Option<StreamItem> {
        if self.end_yielded {
            return None;
        }
        let want = self.yielded as u64 + 1;
        if self.ensure(want).is_some() {
            self.yielded += 1;
            return Some(StreamItem::Bit(self.emitted[want as usize - 1].clone()));
        }
        self.end_yielded = true;
        self.end.clone().map(StreamItem::End)
    }
}
