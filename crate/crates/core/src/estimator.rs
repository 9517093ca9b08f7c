//! Estimating a coin's bias from head frequencies.
//!
//! Toss counts come from Chebyshev's inequality with the variance bound
//! `p(1-p)/n <= 1/(4n)`: `2^(j+2k-2)` tosses put the frequency within `2^-k`
//! of the bias except with probability `2^-j`. A converging coin's mean is
//! off by up to `1/n`, which costs a factor of 4. Sequences spend confidence
//! `2^-(j+k)` on element `k`, giving `2^(j+3k-2)` tosses per element.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coinlab::{CoinSource, FlipError, SourceKind};
use crate::numeric::{as_string, pow2, pow2_recip, Rational};

/// Default cap on tosses one operation may demand.
pub const DEFAULT_TOSS_BUDGET: u64 = 1 << 34;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimateError {
    #[error("j and k must be at least 1 (got j={j}, k={k})")]
    InvalidSpec { j: u32, k: u32 },
    #[error("operation needs {demanded} tosses, over the budget of {budget}")]
    BudgetRefused { demanded: BigUint, budget: u64 },
    #[error(transparent)]
    Flip(#[from] FlipError),
}

/// Failure probability at most `2^-j`, error below `2^-k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AccuracySpec {
    pub j: u32,
    pub k: u32,
}

impl AccuracySpec {
    pub fn new(j: u32, k: u32) -> Result<Self, EstimateError> {
        if j == 0 || k == 0 {
            return Err(EstimateError::InvalidSpec { j, k });
        }
        Ok(AccuracySpec { j, k })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(with = "as_string")]
    pub value: Rational,
    pub tosses_used: u64,
    pub heads: u64,
    pub spec: AccuracySpec,
    pub source_kind: SourceKind,
}

impl Estimate {
    /// Whether `|value - p| < 2^-k`.
    pub fn is_accurate_for(&self, p: &Rational) -> bool {
        let err = if self.value > *p { &self.value - p } else { p - &self.value };
        err < pow2_recip(u64::from(self.spec.k))
    }
}

fn single_exponent(spec: AccuracySpec, kind: SourceKind) -> u64 {
    let base = u64::from(spec.j) + 2 * u64::from(spec.k);
    match kind {
        SourceKind::Exact | SourceKind::Mixture => base - 2,
        SourceKind::Converging => base,
    }
}

/// Tosses for one estimate: `2^(j+2k-2)`, or `2^(j+2k)` for converging coins.
/// Mixtures behave like a single coin at their mean and need no extra tosses.
pub fn sample_count(spec: AccuracySpec, kind: SourceKind) -> BigUint {
    pow2(single_exponent(spec, kind))
}

/// Per-event confidence exponent for the `i`-th member of a sequence.
///
/// Splitting a total confidence `q = 1 - 2^-j` as `q^(2^-i)` needs
/// `j'_i < j + i`; using `j + i` makes the total failure
/// `sum_i 2^-(j+i) <= 2^-j`.
pub fn confidence_schedule(j: u32, i: u32) -> u32 {
    j + i
}

/// `sum_{i=1}^{upto} 2^-(j+i)`.
pub fn schedule_failure_sum(j: u32, upto: u32) -> Rational {
    (1..=upto).map(|i| pow2_recip(u64::from(confidence_schedule(j, i)))).sum()
}

/// Tosses for element `k` of an estimate sequence: `2^(j+3k-2)`, or
/// `2^(j+3k)` for converging coins.
pub fn sequence_sample_count(spec: AccuracySpec, kind: SourceKind) -> BigUint {
    let per_event = AccuracySpec { j: confidence_schedule(spec.j, spec.k), k: spec.k };
    sample_count(per_event, kind)
}

/// Total tosses for sequence elements `1..=kmax`.
pub fn sequence_total_demand(j: u32, kmax: u32, kind: SourceKind) -> BigUint {
    (1..=kmax).map(|k| sequence_sample_count(AccuracySpec { j, k }, kind)).sum()
}

/// Converts a demand to a machine count if it fits the budget.
pub fn admit(demanded: &BigUint, budget: u64) -> Result<u64, EstimateError> {
    match demanded.to_u64() {
        Some(n) if n <= budget => Ok(n),
        _ => Err(EstimateError::BudgetRefused { demanded: demanded.clone(), budget }),
    }
}

/// Tosses `n` times and reports the head frequency.
pub fn frequency_estimate<C: CoinSource + ?Sized>(
    coin: &mut C,
    n: u64,
    spec: AccuracySpec,
) -> Result<Estimate, EstimateError> {
    let heads = coin.count_heads(n)?;
    Ok(Estimate { value: Rational::new(heads.into(), n.into()), tosses_used: n, heads, spec, source_kind: coin.kind() })
}

/// One estimate within `2^-k` of the bias with probability at least `1 - 2^-j`.
pub fn estimate_once<C: CoinSource + ?Sized>(
    coin: &mut C,
    spec: AccuracySpec,
    budget: u64,
) -> Result<Estimate, EstimateError> {
    let n = admit(&sample_count(spec, coin.kind()), budget)?;
    frequency_estimate(coin, n, spec)
}

/// Lazily produced estimates `p_1, p_2, ...` from one coin, each on fresh
/// tosses. All of them are accurate together with probability at least
/// `1 - 2^-j`.
pub struct EstimateSequence<'a, C: CoinSource + ?Sized> {
    coin: &'a mut C,
    j: u32,
    next_k: u32,
    budget: u64,
    spent: u64,
}

pub fn estimate_sequence<C: CoinSource + ?Sized>(coin: &mut C, j: u32, budget: u64) -> EstimateSequence<'_, C> {
    EstimateSequence { coin, j, next_k: 1, budget, spent: 0 }
}

impl<C: CoinSource + ?Sized> EstimateSequence<'_, C> {
    pub fn tosses_spent(&self) -> u64 {
        self.spent
    }
}

impl<C: CoinSource + ?Sized> Iterator for EstimateSequence<'_, C> {
    type Item = Result<Estimate, EstimateError>;

    fn next(&mut self) -> Option<Self::Item> {
        let spec = match AccuracySpec::new(self.j, self.next_k) {
            Ok(spec) => spec,
            Err(e) => return Some(Err(e)),
        };
        let demand = sequence_sample_count(spec, self.coin.kind());
        let n = match admit(&(demand + self.spent), self.budget) {
            Ok(total) => total - self.spent,
            Err(e) => return Some(Err(e)),
        };
        self.next_k += 1;
        self.spent += n;
        Some(frequency_estimate(&mut *self.coin, n, spec))
    }
}

/// Chebyshev bound on `P(|p_hat - p| >= 2^-k)` after `n` tosses: `2^(2k) / (4n)`.
pub fn chebyshev_bound(k: u32, n: u64) -> Rational {
    assert!(n >= 1);
    Rational::new(pow2(2 * u64::from(k)).into(), (BigUint::from(n) * 4u32).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coinlab::{converging_from_target, ExactCoin, Seed};
    use crate::numeric::{ratio, rational_to_bitstream};
    use num_traits::One;

    fn spec(j: u32, k: u32) -> AccuracySpec {
        AccuracySpec::new(j, k).unwrap()
    }

    fn exact(num: i64, den: i64, seed: u64) -> ExactCoin {
        ExactCoin::new(rational_to_bitstream(&ratio(num, den)).unwrap(), Seed(seed))
    }

    #[test]
    fn counts_from_the_formulas() {
        assert_eq!(sample_count(spec(1, 1), SourceKind::Exact), BigUint::from(2u32));
        assert_eq!(sample_count(spec(3, 2), SourceKind::Exact), BigUint::from(32u32));
        assert_eq!(sample_count(spec(1, 1), SourceKind::Converging), BigUint::from(8u32));
        assert_eq!(sample_count(spec(3, 4), SourceKind::Mixture), BigUint::from(512u32));
        assert_eq!(sequence_sample_count(spec(2, 3), SourceKind::Exact), BigUint::from(512u32));
        assert_eq!(sequence_sample_count(spec(1, 1), SourceKind::Exact), BigUint::from(4u32));
        assert_eq!(sequence_sample_count(spec(2, 3), SourceKind::Converging), BigUint::from(2048u32));
        let j2: Vec<BigUint> = (1..=3).map(|k| sequence_sample_count(spec(2, k), SourceKind::Exact)).collect();
        assert_eq!(j2, vec![BigUint::from(8u32), BigUint::from(64u32), BigUint::from(512u32)]);
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_bound(2, 32), ratio(1, 8));
        assert_eq!(chebyshev_bound(1, 1), ratio(1, 1));
        assert_eq!(chebyshev_bound(3, 1 << 9), ratio(1, 32));
    }

    #[test]
    fn schedule() {
        assert_eq!(confidence_schedule(3, 2), 5);
        assert_eq!(confidence_schedule(1, 1), 2);
        for j in 1..6 {
            let partial = schedule_failure_sum(j, 40);
            assert!(partial < pow2_recip(u64::from(j)));
            // the tail left over is exactly 2^-(j+40)
            assert_eq!(pow2_recip(u64::from(j)) - partial, pow2_recip(u64::from(j) + 40));
        }
    }

    #[test]
    fn rejects_zero_exponents() {
        assert!(AccuracySpec::new(0, 3).is_err());
        assert!(AccuracySpec::new(3, 0).is_err());
    }

    #[test]
    fn degenerate_coins_estimate_exactly() {
        for k in 1..5 {
            let e = estimate_once(&mut exact(0, 1, 1), spec(3, k), DEFAULT_TOSS_BUDGET).unwrap();
            assert_eq!(e.value, ratio(0, 1));
            let e = estimate_once(&mut exact(1, 1, 1), spec(3, k), DEFAULT_TOSS_BUDGET).unwrap();
            assert!(e.value.is_one());
            assert_eq!(e.tosses_used, 1 << (3 + 2 * k - 2));
        }
        let mut zero = exact(0, 1, 2);
        let all_zero =
            estimate_sequence(&mut zero, 2, DEFAULT_TOSS_BUDGET).take(4).all(|e| e.unwrap().value == ratio(0, 1));
        assert!(all_zero);
    }

    #[test]
    fn budget_refuses_up_front() {
        let mut coin = exact(1, 3, 1);
        let err = estimate_once(&mut coin, spec(20, 10), 1 << 20).unwrap_err();
        assert_eq!(err, EstimateError::BudgetRefused { demanded: pow2(38), budget: 1 << 20 });
        assert_eq!(coin.flips_taken(), 0);

        let mut seq = estimate_sequence(&mut coin, 2, 500);
        assert_eq!(seq.next().unwrap().unwrap().tosses_used, 8);
        assert_eq!(seq.next().unwrap().unwrap().tosses_used, 64);
        assert!(matches!(seq.next().unwrap(), Err(EstimateError::BudgetRefused { .. })));
        assert_eq!(seq.tosses_spent(), 72);
    }

    #[test]
    fn sequence_uses_fresh_tosses() {
        let mut coin = converging_from_target(rational_to_bitstream(&ratio(1, 3)).unwrap(), Seed(5));
        let estimates: Vec<Estimate> =
            estimate_sequence(&mut coin, 1, DEFAULT_TOSS_BUDGET).take(3).map(Result::unwrap).collect();
        let used: Vec<u64> = estimates.iter().map(|e| e.tosses_used).collect();
        assert_eq!(used, vec![16, 128, 1024]);
        assert_eq!(coin.flips_taken(), 16 + 128 + 1024);
        for e in &estimates {
            assert_eq!(e.value, Rational::new(e.heads.into(), e.tosses_used.into()));
            assert_eq!(e.source_kind, SourceKind::Converging);
        }
    }

    #[test]
    fn estimate_at_third_is_usually_accurate() {
        let p = ratio(1, 3);
        let failures = (0..400)
            .filter(|&seed| {
                let e = estimate_once(&mut exact(1, 3, seed), spec(3, 4), DEFAULT_TOSS_BUDGET).unwrap();
                !e.is_accurate_for(&p)
            })
            .count();
        // Chebyshev promises <= 1/8; the binomial spread is much tighter
        assert!(failures < 50, "{failures} failures");
    }
}
