use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

use crate::numeric::Rational;

/// `P(X >= failures)` for `X ~ Binomial(trials, rate)`, summed exactly.
pub fn binomial_upper_tail(trials: u64, failures: u64, rate: &Rational) -> Rational {
    assert!(failures <= trials);
    assert!(*rate >= Rational::zero() && *rate <= Rational::from_integer(1.into()));
    if failures == 0 {
        return Rational::from_integer(1.into());
    }
    let a = rate.numer().to_biguint().expect("non-negative");
    let b = rate.denom().to_biguint().expect("positive");
    let c = &b - &a;
    // term_i = C(T, i) a^i c^(T-i), built upward from i = failures
    let mut choose = binomial_coefficient(trials, failures);
    let mut a_pow = num_traits::pow(a.clone(), failures as usize);
    let mut c_pows = Vec::with_capacity((trials - failures + 1) as usize);
    let mut c_pow = BigUint::from(1u32);
    for _ in 0..=trials - failures {
        c_pows.push(c_pow.clone());
        c_pow *= &c;
    }
    let mut total = BigUint::zero();
    for i in failures..=trials {
        total += &choose * &a_pow * &c_pows[(trials - i) as usize];
        if i < trials {
            choose = choose * BigUint::from(trials - i) / BigUint::from(i + 1);
            a_pow *= &a;
        }
    }
    let denominator = num_traits::pow(b, trials as usize);
    Rational::new(BigInt::from(total), BigInt::from(denominator))
}

fn binomial_coefficient(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut out = BigUint::from(1u32);
    for i in 0..k {
        out = out * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    out
}

/// One-sided p-value for `H0: failure rate <= bound` after seeing `failures`
/// in `trials`.
pub fn binomial_p_value(trials: u64, failures: u64, bound: &Rational) -> f64 {
    binomial_upper_tail(trials, failures, bound).to_f64().unwrap_or(0.0)
}
