//! Parametric interarrival/service distributions and seeded random streams.
//!
//! Specs are written as `exp:rate`, `det:value`, `erlang:k:rate` or
//! `unif:a:b`. Every variate is produced by inverse transform from a uniform
//! drawn on the open interval (0, 1).

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The shape of a distribution together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Erlang { shape: u32, rate: f64 },
    Uniform { lower: f64, upper: f64 },
}

/// A validated distribution. Construction rejects non-positive rates and
/// values, zero Erlang shapes and empty or negative uniform ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DistributionSpec(DistributionKind);

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidDistribution(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

impl DistributionSpec {
    pub fn new(kind: DistributionKind) -> Result<Self> {
        match kind {
            DistributionKind::Exponential { rate } => {
                positive("rate", rate)?;
            }
            DistributionKind::Deterministic { value } => {
                positive("value", value)?;
            }
            DistributionKind::Erlang { shape, rate } => {
                if shape == 0 {
                    return Err(Error::InvalidDistribution(
                        "erlang shape must be >= 1".into(),
                    ));
                }
                positive("rate", rate)?;
            }
            DistributionKind::Uniform { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && 0.0 <= lower && lower < upper) {
                    return Err(Error::InvalidDistribution(format!(
                        "uniform requires 0 <= lower < upper, got [{lower}, {upper}]"
                    )));
                }
            }
        }
        Ok(DistributionSpec(kind))
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(DistributionKind::Exponential { rate })
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        Self::new(DistributionKind::Deterministic { value })
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        Self::new(DistributionKind::Erlang { shape, rate })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        Self::new(DistributionKind::Uniform { lower, upper })
    }

    pub fn kind(&self) -> DistributionKind {
        self.0
    }

    /// The rate if this is an exponential distribution.
    pub fn exponential_rate(&self) -> Option<f64> {
        match self.0 {
            DistributionKind::Exponential { rate } => Some(rate),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self.0 {
            DistributionKind::Exponential { rate } => 1.0 / rate,
            DistributionKind::Deterministic { value } => value,
            DistributionKind::Erlang { shape, rate } => shape as f64 / rate,
            DistributionKind::Uniform { lower, upper } => 0.5 * (lower + upper),
        }
    }

    pub fn variance(&self) -> f64 {
        match self.0 {
            DistributionKind::Exponential { rate } => 1.0 / (rate * rate),
            DistributionKind::Deterministic { .. } => 0.0,
            DistributionKind::Erlang { shape, rate } => shape as f64 / (rate * rate),
            DistributionKind::Uniform { lower, upper } => {
                let w = upper - lower;
                w * w / 12.0
            }
        }
    }

    /// Draws one variate from `stream`.
    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        match self.0 {
            DistributionKind::Exponential { rate } => exp_inverse(stream.next_open01(), rate),
            DistributionKind::Deterministic { value } => value,
            // Sum of logs rather than log of the product: the product of many
            // uniforms underflows for large shapes.
            DistributionKind::Erlang { shape, rate } => {
                let mut acc = 0.0;
                for _ in 0..shape {
                    acc -= stream.next_open01().ln();
                }
                acc / rate
            }
            DistributionKind::Uniform { lower, upper } => {
                lower + (upper - lower) * stream.next_open01()
            }
        }
    }
}

/// Inverse CDF of the exponential law applied to `u` in (0, 1).
#[inline]
pub fn exp_inverse(u: f64, rate: f64) -> f64 {
    -u.ln() / rate
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            DistributionKind::Exponential { rate } => write!(f, "exp:{rate}"),
            DistributionKind::Deterministic { value } => write!(f, "det:{value}"),
            DistributionKind::Erlang { shape, rate } => write!(f, "erlang:{shape}:{rate}"),
            DistributionKind::Uniform { lower, upper } => write!(f, "unif:{lower}:{upper}"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| -> Result<f64> {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidDistribution(format!("bad number {p:?} in {s:?}")))
        };
        match parts.as_slice() {
            ["exp", rate] => Self::exponential(num(rate)?),
            ["det", value] => Self::deterministic(num(value)?),
            ["erlang", k, rate] => {
                let shape = k.trim().parse::<u32>().map_err(|_| {
                    Error::InvalidDistribution(format!("bad erlang shape {k:?} in {s:?}"))
                })?;
                Self::erlang(shape, num(rate)?)
            }
            ["unif", a, b] => Self::uniform(num(a)?, num(b)?),
            _ => Err(Error::InvalidDistribution(format!(
                "expected exp:rate, det:value, erlang:k:rate or unif:a:b, got {s:?}"
            ))),
        }
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let kind = DistributionKind::deserialize(d)?;
        DistributionSpec::new(kind).map_err(serde::de::Error::custom)
    }
}

/// A reproducible stream of uniforms keyed by `(seed, stream_id)`.
///
/// Backed by ChaCha8, whose 64-bit stream selector gives 2^64 independent
/// sequences per seed; the output is identical on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on the open interval (0, 1): the top 53 bits shifted by half an ulp.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * SCALE
    }
}

/// Role of a stream inside one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Arrivals = 0,
    Services = 1,
}

/// Stream id for `(replication, role)`; two ids per replication so arrival
/// and service sequences never share a stream.
pub fn stream_id_for(replication: u64, role: StreamRole) -> u64 {
    replication.wrapping_mul(2).wrapping_add(role as u64)
}
