use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::NumericError;

/// Exact arbitrary-precision fraction, always in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

/// `num / den` as an exact rational. Panics when `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `2^e` as an arbitrary-precision integer.
pub fn pow2(e: u64) -> BigUint {
    BigUint::one() << e
}

/// `2^-k` as an exact rational.
pub fn pow2_recip(k: u64) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(pow2(k)))
}

/// Parses `a/b` or a bare integer `a`.
pub fn parse_rational(text: &str) -> Result<Rational, NumericError> {
    let err = || NumericError::Parse(text.to_string());
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| err())?;
    let den: BigInt = den.parse().map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(num, den))
}


/// Serde adapter writing a [`Rational`] as the string `"a/b"` (or `"a"`).
pub mod as_string {
    use super::{parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(value)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}
