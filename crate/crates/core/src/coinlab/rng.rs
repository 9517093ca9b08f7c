use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Node in a tree of reproducible seeds. Children are derived by hashing, so
/// trial `i` of a scenario gets the same stream no matter how trials are
/// scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn split(self, index: u64) -> Seed {
        Seed(splitmix64(splitmix64(self.0) ^ index.wrapping_mul(GOLDEN_GAMMA).rotate_left(17)))
    }

    /// Child keyed by a name (FNV-1a of the bytes).
    pub fn split_named(self, name: &str) -> Seed {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in name.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        self.split(h)
    }

    pub fn bits(self) -> RandomBits {
        RandomBits::from_rng(Box::new(Xoshiro256PlusPlus::seed_from_u64(self.0)))
    }
}

/// Uniform random bits drawn from a 64-bit generator, with an exact count of
/// how many bits have been handed out.
pub struct RandomBits {
    rng: Box<dyn RngCore + Send>,
    buf: u64,
    avail: u32,
    consumed: u64,
}

impl RandomBits {
    pub fn from_rng(rng: Box<dyn RngCore + Send>) -> Self {
        RandomBits { rng, buf: 0, avail: 0, consumed: 0 }
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    #[inline]
    pub fn next_bit(&mut self) -> u8 {
        if self.avail == 0 {
            self.buf = self.rng.next_u64();
            self.avail = 64;
        }
        let bit = (self.buf >> 63) as u8;
        self.buf <<= 1;
        self.avail -= 1;
        self.consumed += 1;
        bit
    }

    /// `count` bits (at most 64) packed into the low end of the result,
    /// first drawn bit most significant.
    pub fn take_bits(&mut self, count: u32) -> u64 {
        debug_assert!(count <= 64);
        let mut out = 0u64;
        for _ in 0..count {
            out = (out << 1) | u64::from(self.next_bit());
        }
        out
    }

    /// Draws `count` bits and returns how many of them are 1, i.e. an exact
    /// Binomial(count, 1/2) sample.
    pub fn count_ones(&mut self, count: u64) -> u64 {
        let words = count / 64;
        let mut ones = 0u64;
        for _ in 0..words {
            ones += u64::from(self.rng.next_u64().count_ones());
        }
        self.consumed += words * 64;
        let rest = (count % 64) as u32;
        if rest > 0 {
            ones += u64::from(self.take_bits(rest).count_ones());
        }
        ones
    }

    /// Uniform integer in `[0, bound)` by rejection on the smallest covering
    /// power of two.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        if bound == 1 {
            return 0;
        }
        let width = 64 - (bound - 1).leading_zeros();
        loop {
            let candidate = self.take_bits(width);
            if candidate < bound {
                return candidate;
            }
        }
    }
}
