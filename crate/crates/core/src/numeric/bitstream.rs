use std::fmt;
use std::sync::{Arc, Mutex, RwLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{pow2, NumericError, Rational};

/// Pull-based producer of a binary expansion, 64 bits at a time.
///
/// The `w`-th call (from 0) returns bits `64w + 1 ..= 64w + 64`, most
/// significant first.
pub trait WordSource: Send {
    fn next_word(&mut self) -> u64;
}

struct Inner {
    label: String,
    exact: Option<Rational>,
    cache: RwLock<Vec<u64>>,
    source: Mutex<Box<dyn WordSource>>,
}

/// Lazy, memoized binary expansion of a real in `[0, 1]`.
///
/// Clones share one cache, so a bit is produced at most once and every reader
/// sees the same value for it. Safe to read from several threads.
#[derive(Clone)]
pub struct BitStream {
    inner: Arc<Inner>,
}

impl fmt::Debug for BitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BitStream").field("label", &self.inner.label).finish()
    }
}

impl BitStream {
    pub fn from_source(label: impl Into<String>, source: Box<dyn WordSource>) -> Self {
        Self::build(label.into(), None, source)
    }

    /// Stream whose `n`-th bit is `predicate(n)`.
    pub fn from_predicate<F>(label: impl Into<String>, predicate: F) -> Self
    where
        F: Fn(u64) -> bool + Send + 'static,
    {
        Self::from_source(label, Box::new(PredicateWords { predicate, next_index: 1 }))
    }

    fn build(label: String, exact: Option<Rational>, source: Box<dyn WordSource>) -> Self {
        BitStream {
            inner: Arc::new(Inner { label, exact, cache: RwLock::new(Vec::new()), source: Mutex::new(source) }),
        }
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    /// The exact value, when the stream was built from a rational.
    pub fn exact_value(&self) -> Option<&Rational> {
        self.inner.exact.as_ref()
    }

    /// Bits `64w + 1 ..= 64w + 64` packed most significant first.
    pub fn word(&self, w: usize) -> u64 {
        if let Some(&word) = self.inner.cache.read().expect("bit cache poisoned").get(w) {
            return word;
        }
        let mut source = self.inner.source.lock().expect("bit source poisoned");
        loop {
            let len = {
                let cache = self.inner.cache.read().expect("bit cache poisoned");
                if let Some(&word) = cache.get(w) {
                    return word;
                }
                cache.len()
            };
            debug_assert!(len <= w);
            let word = source.next_word();
            self.inner.cache.write().expect("bit cache poisoned").push(word);
        }
    }

    /// Bit `b_n`, with `n >= 1`.
    pub fn bit(&self, n: u64) -> u8 {
        assert!(n >= 1, "bits are numbered from 1");
        let offset = n - 1;
        let word = self.word((offset / 64) as usize);
        ((word >> (63 - offset % 64)) & 1) as u8
    }

    /// `b_1 ..= b_n`.
    pub fn prefix(&self, n: u64) -> Vec<u8> {
        (1..=n).map(|i| self.bit(i)).collect()
    }

    /// Number of bits materialized so far.
    pub fn cached_bits(&self) -> u64 {
        self.inner.cache.read().expect("bit cache poisoned").len() as u64 * 64
    }
}

struct PredicateWords<F> {
    predicate: F,
    next_index: u64,
}

impl<F: Fn(u64) -> bool + Send> WordSource for PredicateWords<F> {
    fn next_word(&mut self) -> u64 {
        let mut word = 0u64;
        for _ in 0..64 {
            word = (word << 1) | u64::from((self.predicate)(self.next_index));
            self.next_index += 1;
        }
        word
    }
}

/// Long division of `rem / den`, 64 bits per step. Dyadic values therefore end
/// in an infinite run of zeros.
struct RationalWords {
    rem: BigUint,
    den: BigUint,
}

impl WordSource for RationalWords {
    fn next_word(&mut self) -> u64 {
        if self.rem.is_zero() {
            return 0;
        }
        let shifted = &self.rem << 64u32;
        let quotient = &shifted / &self.den;
        self.rem = shifted % &self.den;
        quotient.to_u64().expect("quotient of a proper fraction fits in 64 bits")
    }
}

struct AllOnes;

impl WordSource for AllOnes {
    fn next_word(&mut self) -> u64 {
        u64::MAX
    }
}

/// Binary expansion of `r`, which must lie in `[0, 1]`.
///
/// Dyadic rationals get the expansion ending in zeros. The value 1 has no such
/// expansion and is represented as `0.111...`.
pub fn rational_to_bitstream(r: &Rational) -> Result<BitStream, NumericError> {
    if r.is_negative() || *r > Rational::one() {
        return Err(NumericError::OutOfRange(r.to_string()));
    }
    let label = r.to_string();
    let source: Box<dyn WordSource> = if r.is_one() {
        Box::new(AllOnes)
    } else {
        Box::new(RationalWords {
            rem: r.numer().to_biguint().expect("non-negative"),
            den: r.denom().to_biguint().expect("positive"),
        })
    };
    Ok(BitStream::build(label, Some(r.clone()), source))
}

/// `sum b_i 2^-i` over the given bits.
pub fn bits_to_rational(bits: &[u8]) -> Rational {
    let mut numer = BigUint::zero();
    for &b in bits {
        numer = (numer << 1u32) + BigUint::from(b & 1);
    }
    Rational::new(BigInt::from(numer), BigInt::from(pow2(bits.len() as u64)))
}

/// The first `n + 1` bits of `x` as a rational. Within `2^-n` of `x`, so the
/// sequence over `n` converges quickly.
pub fn truncation_sequence(x: &BitStream, n: u64) -> Rational {
    bits_to_rational(&x.prefix(n + 1))
}
