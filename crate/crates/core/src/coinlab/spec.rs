//! Textual and file-based coin descriptions.
//!
//! ```text
//! exact:<a>/<b>              exact:set:<fixture>:<direct|guarded>
//! converging:<a>/<b>         converging:set:<fixture>:<direct|guarded>
//! mixture:<a>/<b>@<w>/<v>[,<a>/<b>@<w>/<v>...]
//! mixture:uniform:<a>/<b>:<c>/<d>
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{converging_from_target, CoinSource, ExactCoin, MixtureCoin, MixtureDistribution, Seed, SourceKind};
use crate::numeric::{parse_rational, rational_to_bitstream, BitStream, NumericError, Rational};
use crate::oracle::{encode_set, EncodingMode, OracleSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoinSpecError {
    #[error("malformed coin spec {0:?}")]
    Parse(String),
    #[error("invalid coin: {0}")]
    Invalid(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Where a fixed bias comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum BiasSpec {
    Rational(Rational),
    /// `p_X` for a named oracle-set fixture.
    Set {
        fixture: String,
        mode: EncodingMode,
    },
}

impl BiasSpec {
    pub fn stream(&self) -> Result<BitStream, CoinSpecError> {
        match self {
            BiasSpec::Rational(r) => Ok(rational_to_bitstream(r)?),
            BiasSpec::Set { fixture, mode } => {
                let set = OracleSet::parse(fixture).map_err(|e| CoinSpecError::Invalid(e.to_string()))?;
                Ok(encode_set(&set, *mode))
            }
        }
    }
}

impl FromStr for BiasSpec {
    type Err = CoinSpecError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = text.strip_prefix("set:") {
            let (fixture, mode) = rest.rsplit_once(':').ok_or_else(|| CoinSpecError::Parse(text.to_string()))?;
            let mode = mode.parse().map_err(|_| CoinSpecError::Parse(text.to_string()))?;
            OracleSet::parse(fixture).map_err(|e| CoinSpecError::Invalid(e.to_string()))?;
            return Ok(BiasSpec::Set { fixture: fixture.to_string(), mode });
        }
        Ok(BiasSpec::Rational(parse_rational(text)?))
    }
}

impl fmt::Display for BiasSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BiasSpec::Rational(r) => write!(f, "{}", r),
            BiasSpec::Set { fixture, mode } => write!(f, "set:{fixture}:{mode}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoinSpec {
    Exact(BiasSpec),
    Converging(BiasSpec),
    Mixture(MixtureDistribution),
}

impl CoinSpec {
    pub fn kind(&self) -> SourceKind {
        match self {
            CoinSpec::Exact(_) => SourceKind::Exact,
            CoinSpec::Converging(_) => SourceKind::Converging,
            CoinSpec::Mixture(_) => SourceKind::Mixture,
        }
    }

    /// The probability the estimators converge to, when it is a known
    /// rational (the bias, its limit, or the mixture mean).
    pub fn effective_bias(&self) -> Option<Rational> {
        match self {
            CoinSpec::Exact(BiasSpec::Rational(r)) | CoinSpec::Converging(BiasSpec::Rational(r)) => Some(r.clone()),
            CoinSpec::Mixture(d) => Some(super::mixture_mean(d)),
            _ => None,
        }
    }

    pub fn build(&self, seed: Seed) -> Result<Box<dyn CoinSource>, CoinSpecError> {
        Ok(match self {
            CoinSpec::Exact(bias) => Box::new(ExactCoin::new(bias.stream()?, seed)),
            CoinSpec::Converging(bias) => Box::new(converging_from_target(bias.stream()?, seed)),
            CoinSpec::Mixture(dist) => Box::new(MixtureCoin::new(dist.clone(), seed)?),
        })
    }
}

fn parse_pair(text: &str, sep: char) -> Result<(Rational, Rational), CoinSpecError> {
    let (a, b) = text.split_once(sep).ok_or_else(|| CoinSpecError::Parse(text.to_string()))?;
    Ok((parse_rational(a)?, parse_rational(b)?))
}

impl FromStr for CoinSpec {
    type Err = CoinSpecError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        let (kind, rest) = text.split_once(':').ok_or_else(|| CoinSpecError::Parse(text.to_string()))?;
        let spec = match kind {
            "exact" => CoinSpec::Exact(rest.parse()?),
            "converging" => CoinSpec::Converging(rest.parse()?),
            "mixture" => {
                let dist = if let Some(interval) = rest.strip_prefix("uniform:") {
                    let (low, high) = parse_pair(interval, ':')?;
                    MixtureDistribution::Uniform { low, high }
                } else {
                    let parts = rest.split(',').map(|part| parse_pair(part, '@')).collect::<Result<Vec<_>, _>>()?;
                    MixtureDistribution::Discrete(parts)
                };
                dist.validate()?;
                CoinSpec::Mixture(dist)
            }
            _ => return Err(CoinSpecError::Parse(text.to_string())),
        };
        if let CoinSpec::Exact(BiasSpec::Rational(r)) | CoinSpec::Converging(BiasSpec::Rational(r)) = &spec {
            rational_to_bitstream(r)?;
        }
        Ok(spec)
    }
}

impl fmt::Display for CoinSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoinSpec::Exact(b) => write!(f, "exact:{b}"),
            CoinSpec::Converging(b) => write!(f, "converging:{b}"),
            CoinSpec::Mixture(MixtureDistribution::Uniform { low, high }) => write!(f, "mixture:uniform:{low}:{high}"),
            CoinSpec::Mixture(MixtureDistribution::Discrete(parts)) => {
                f.write_str("mixture:")?;
                for (i, (x, w)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}@{w}")?;
                }
                Ok(())
            }
        }
    }
}

/// Coin description as stored in a JSON or TOML config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinConfig {
    pub kind: SourceKind,
    /// `"a/b"` or `"set:<fixture>:<mode>"`; exact and converging coins only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `(value, weight)` pairs for a discrete mixture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<(String, String)>>,
    /// `(low, high)` for a uniform mixture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<(String, String)>,
}

impl CoinConfig {
    pub fn to_spec(&self) -> Result<CoinSpec, CoinSpecError> {
        let missing = |field: &str| CoinSpecError::Invalid(format!("{} coin needs `{field}`", self.kind));
        match self.kind {
            SourceKind::Exact | SourceKind::Converging => {
                let bias: BiasSpec = self.bias.as_deref().ok_or_else(|| missing("bias"))?.parse()?;
                let text = format!("{}:{}", self.kind, bias);
                text.parse()
            }
            SourceKind::Mixture => {
                let dist = match (&self.distribution, &self.interval) {
                    (Some(parts), None) => MixtureDistribution::Discrete(
                        parts.iter().map(|(x, w)| Ok((parse_rational(x)?, parse_rational(w)?))).collect::<Result<
                            _,
                            CoinSpecError,
                        >>(
                        )?,
                    ),
                    (None, Some((low, high))) => {
                        MixtureDistribution::Uniform { low: parse_rational(low)?, high: parse_rational(high)? }
                    }
                    _ => return Err(missing("distribution` or `interval")),
                };
                dist.validate()?;
                Ok(CoinSpec::Mixture(dist))
            }
        }
    }

    pub fn from_spec(spec: &CoinSpec, seed: Option<u64>) -> Self {
        let mut config = CoinConfig { kind: spec.kind(), bias: None, seed, distribution: None, interval: None };
        match spec {
            CoinSpec::Exact(b) | CoinSpec::Converging(b) => config.bias = Some(b.to_string()),
            CoinSpec::Mixture(MixtureDistribution::Discrete(parts)) => {
                config.distribution = Some(parts.iter().map(|(x, w)| (x.to_string(), w.to_string())).collect())
            }
            CoinSpec::Mixture(MixtureDistribution::Uniform { low, high }) => {
                config.interval = Some((low.to_string(), high.to_string()))
            }
        }
        config
    }
}
