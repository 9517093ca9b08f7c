use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::race::{race_many, race_once, RaceBias, DEFAULT_TIE_CAP};
use super::rng::{RandomBits, Seed};
use super::spec::CoinSpecError;
use super::{CoinSource, FlipError, FlipOutcome, SourceKind};
use crate::numeric::{rational_to_bitstream, Rational};

/// Distribution the per-toss bias is drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum MixtureDistribution {
    /// `(bias, weight)` pairs; weights positive and summing to 1.
    Discrete(Vec<(Rational, Rational)>),
    /// Uniform on `[low, high] ⊆ [0, 1]`.
    Uniform { low: Rational, high: Rational },
}

impl MixtureDistribution {
    pub fn validate(&self) -> Result<(), CoinSpecError> {
        let unit = |r: &Rational| !r.is_negative() && *r <= Rational::one();
        match self {
            MixtureDistribution::Discrete(parts) => {
                if parts.is_empty() {
                    return Err(CoinSpecError::Invalid("mixture needs at least one component".into()));
                }
                for (x, w) in parts {
                    if !unit(x) {
                        return Err(CoinSpecError::Invalid(format!("bias {x} outside [0, 1]")));
                    }
                    if !w.is_positive() {
                        return Err(CoinSpecError::Invalid(format!("weight {w} is not positive")));
                    }
                }
                let total: Rational = parts.iter().map(|(_, w)| w.clone()).sum();
                if !total.is_one() {
                    return Err(CoinSpecError::Invalid(format!("weights sum to {total}, not 1")));
                }
            }
            MixtureDistribution::Uniform { low, high } => {
                if !unit(low) || !unit(high) || low > high {
                    return Err(CoinSpecError::Invalid(format!("[{low}, {high}] is not an interval in [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// `mu_x`: the exact mean of the bias distribution.
pub fn mixture_mean(distribution: &MixtureDistribution) -> Rational {
    match distribution {
        MixtureDistribution::Discrete(parts) => parts.iter().map(|(x, w)| x * w).sum(),
        MixtureDistribution::Uniform { low, high } => (low + high) / Rational::from_integer(BigInt::from(2)),
    }
}

enum Sampler {
    /// Component `i` is picked with probability `selectors[i]` given that
    /// none before it was picked; the last component takes what is left.
    Discrete { selectors: Vec<RaceBias>, biases: Vec<RaceBias> },
    /// Endpoints over a common denominator: `low = a / d`, `high = b / d`.
    Uniform { a: BigInt, width: BigInt, d: BigInt },
}

/// Each toss draws an independent bias from the distribution, then flips once
/// at that bias. Heads therefore has probability `mu_x`.
pub struct MixtureCoin {
    distribution: MixtureDistribution,
    sampler: Sampler,
    bits: RandomBits,
    flips_taken: u64,
    tie_cap: u32,
}

impl MixtureCoin {
    pub fn new(distribution: MixtureDistribution, seed: Seed) -> Result<Self, CoinSpecError> {
        distribution.validate()?;
        let sampler = match &distribution {
            MixtureDistribution::Discrete(parts) => {
                let mut remaining = Rational::one();
                let mut selectors = Vec::with_capacity(parts.len());
                for (_, w) in &parts[..parts.len() - 1] {
                    let conditional = w / &remaining;
                    selectors.push(RaceBias::new(rational_to_bitstream(&conditional).expect("weight ratio in [0, 1]")));
                    remaining -= w;
                }
                let biases = parts
                    .iter()
                    .map(|(x, _)| RaceBias::new(rational_to_bitstream(x).expect("validated bias")))
                    .collect();
                Sampler::Discrete { selectors, biases }
            }
            MixtureDistribution::Uniform { low, high } => {
                let d = low.denom().lcm(high.denom());
                let a = low.numer() * (&d / low.denom());
                let b = high.numer() * (&d / high.denom());
                Sampler::Uniform { width: &b - &a, a, d }
            }
        };
        Ok(MixtureCoin { distribution, sampler, bits: seed.bits(), flips_taken: 0, tie_cap: DEFAULT_TIE_CAP })
    }

    pub fn distribution(&self) -> &MixtureDistribution {
        &self.distribution
    }

    pub fn mean(&self) -> Rational {
        mixture_mean(&self.distribution)
    }

    fn pick_component(&mut self) -> Result<usize, FlipError> {
        let Sampler::Discrete { selectors, .. } = &self.sampler else { unreachable!() };
        for (i, selector) in selectors.iter().enumerate() {
            if race_once(&mut self.bits, selector, self.tie_cap)? {
                return Ok(i);
            }
        }
        Ok(selectors.len())
    }

    /// Heads iff `V < low + (high - low) U` for independent uniforms `U`, `V`,
    /// refined one bit of each at a time until the comparison is settled.
    fn uniform_flip(&mut self) -> Result<bool, FlipError> {
        let Sampler::Uniform { a, width, d } = &self.sampler else { unreachable!() };
        let mut u = BigInt::zero();
        let mut v = BigInt::zero();
        let mut scaled_a = a.clone();
        for _ in 0..self.tie_cap {
            u = (u << 1u32) + BigInt::from(self.bits.next_bit());
            v = (v << 1u32) + BigInt::from(self.bits.next_bit());
            scaled_a <<= 1u32;
            // With m bits drawn, d*V*2^m - width*U*2^m ranges over the open
            // interval (d v - width (u + 1), d v + d - width u).
            let dv = d * &v;
            if &dv + d - width * &u <= scaled_a {
                return Ok(true);
            }
            if dv - width * (&u + 1u32) >= scaled_a {
                return Ok(false);
            }
        }
        Err(FlipError::MeasureZeroCap { cap: self.tie_cap })
    }
}

impl CoinSource for MixtureCoin {
    fn flip(&mut self) -> Result<FlipOutcome, FlipError> {
        let heads = match &self.sampler {
            Sampler::Discrete { .. } => {
                let i = self.pick_component()?;
                let Sampler::Discrete { biases, .. } = &self.sampler else { unreachable!() };
                race_once(&mut self.bits, &biases[i], self.tie_cap)?
            }
            Sampler::Uniform { .. } => self.uniform_flip()?,
        };
        self.flips_taken += 1;
        Ok(FlipOutcome::from_heads(heads))
    }

    /// Discrete mixtures split the batch into per-component counts with
    /// sequential conditional binomials, then race each count at its bias.
    fn count_heads(&mut self, n: u64) -> Result<u64, FlipError> {
        let mut heads = 0;
        match &self.sampler {
            Sampler::Discrete { selectors, biases } => {
                let mut remaining = n;
                for (i, bias) in biases.iter().enumerate() {
                    let picked = match selectors.get(i) {
                        Some(selector) => race_many(&mut self.bits, selector, remaining, self.tie_cap)?,
                        None => remaining,
                    };
                    remaining -= picked;
                    heads += race_many(&mut self.bits, bias, picked, self.tie_cap)?;
                }
            }
            Sampler::Uniform { .. } => {
                for _ in 0..n {
                    heads += u64::from(self.uniform_flip()?);
                }
            }
        }
        self.flips_taken += n;
        Ok(heads)
    }

    fn kind(&self) -> SourceKind {
        SourceKind::Mixture
    }

    fn flips_taken(&self) -> u64 {
        self.flips_taken
    }

    fn random_bits_consumed(&self) -> u64 {
        self.bits.consumed()
    }
}
