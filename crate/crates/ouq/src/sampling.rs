//! Monte Carlo plug-in CDFs under fixed input distributions.

use ouq_core::{Model, ModelError};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gumbel, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Samples drawn per independently seeded chunk.
pub const CHUNK_SIZE: usize = 4096;

const MAX_REJECTIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingDistribution {
    /// Location is the mode.
    Gumbel { mode: f64, scale: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { a: f64, b: f64 },
    /// Parameters of the underlying normal.
    LogNormal { mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("invalid parameters for {0:?}")]
    InvalidParameters(SamplingDistribution),
    #[error("truncation to [{lower}, {upper}] rejected {MAX_REJECTIONS} consecutive draws")]
    Truncation { lower: f64, upper: f64 },
    #[error("expected {expected} input distributions, the model takes {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

enum Sampler {
    Gumbel(Gumbel<f64>),
    Normal(Normal<f64>),
    Uniform { a: f64, width: f64 },
    LogNormal(LogNormal<f64>),
    Point(f64),
}

impl Sampler {
    fn new(d: SamplingDistribution) -> Result<Self, SamplingError> {
        let bad = || SamplingError::InvalidParameters(d);
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let valid = match d {
            SamplingDistribution::Gumbel { mode, scale } => mode.is_finite() && positive(scale),
            SamplingDistribution::Normal { mean, sd } => mean.is_finite() && positive(sd),
            SamplingDistribution::Uniform { a, b } => a.is_finite() && b.is_finite() && a <= b,
            SamplingDistribution::LogNormal { mu, sigma } => mu.is_finite() && positive(sigma),
        };
        if !valid {
            return Err(bad());
        }
        Ok(match d {
            SamplingDistribution::Gumbel { mode, scale } => {
                Sampler::Gumbel(Gumbel::new(mode, scale).map_err(|_| bad())?)
            }
            SamplingDistribution::Normal { mean, sd } => {
                Sampler::Normal(Normal::new(mean, sd).map_err(|_| bad())?)
            }
            SamplingDistribution::Uniform { a, b } if a == b => Sampler::Point(a),
            // affine map of a unit draw; stays well behaved for very narrow ranges
            SamplingDistribution::Uniform { a, b } => Sampler::Uniform { a, width: b - a },
            SamplingDistribution::LogNormal { mu, sigma } => {
                Sampler::LogNormal(LogNormal::new(mu, sigma).map_err(|_| bad())?)
            }
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Gumbel(d) => d.sample(rng),
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Uniform { a, width } => a + width * rng.gen::<f64>(),
            Sampler::LogNormal(d) => d.sample(rng),
            Sampler::Point(v) => *v,
        }
    }
}

/// One input's sampling law, optionally truncated to `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDistribution {
    pub distribution: SamplingDistribution,
    #[serde(default)]
    pub truncation: Option<(f64, f64)>,
}

impl InputDistribution {
    pub fn new(distribution: SamplingDistribution) -> Self {
        Self { distribution, truncation: None }
    }

    pub fn truncated(distribution: SamplingDistribution, lower: f64, upper: f64) -> Self {
        Self { distribution, truncation: Some((lower, upper)) }
    }
}

struct TruncatedSampler {
    sampler: Sampler,
    bounds: Option<(f64, f64)>,
}

impl TruncatedSampler {
    fn new(d: &InputDistribution) -> Result<Self, SamplingError> {
        Ok(Self { sampler: Sampler::new(d.distribution)?, bounds: d.truncation })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Result<f64, SamplingError> {
        let Some((lower, upper)) = self.bounds else {
            return Ok(self.sampler.sample(rng));
        };
        for _ in 0..MAX_REJECTIONS {
            let v = self.sampler.sample(rng);
            if v >= lower && v <= upper {
                return Ok(v);
            }
        }
        Err(SamplingError::Truncation { lower, upper })
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Draws `n` joint samples (row-major, one column per input) with
/// independent inputs. Chunks of [`CHUNK_SIZE`] rows use their own ChaCha
/// stream, so the output depends only on `seed` and `n`.
pub fn draw(inputs: &[InputDistribution], n: usize, seed: u64) -> Result<Vec<f64>, SamplingError> {
    let samplers = inputs
        .iter()
        .map(TruncatedSampler::new)
        .collect::<Result<Vec<_>, _>>()?;
    let dim = inputs.len();
    let chunks: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK_SIZE))
        .into_par_iter()
        .map(|c| {
            let rows = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
            let mut rng = chunk_rng(seed, c);
            let mut out = Vec::with_capacity(rows * dim);
            for _ in 0..rows {
                for s in &samplers {
                    out.push(s.sample(&mut rng)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, SamplingError>>()?;
    Ok(chunks.concat())
}

/// Model outputs for `n` joint samples, in draw order.
pub fn sample_outputs<M: Model + ?Sized>(
    inputs: &[InputDistribution],
    model: &M,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, SamplingError> {
    if inputs.len() != model.input_dim() {
        return Err(SamplingError::Dimension { expected: inputs.len(), got: model.input_dim() });
    }
    let points = draw(inputs, n, seed)?;
    let dim = inputs.len().max(1);
    let chunk = CHUNK_SIZE * dim;
    let evaluate = |block: &[f64]| -> Result<Vec<f64>, ModelError> {
        let mut out = Vec::with_capacity(block.len() / dim);
        model.evaluate_batch(block, &mut out)?;
        Ok(out)
    };
    let blocks: Vec<Vec<f64>> = if model.is_concurrent() {
        points.par_chunks(chunk).map(evaluate).collect::<Result<_, _>>()?
    } else {
        points.chunks(chunk).map(evaluate).collect::<Result<_, _>>()?
    };
    Ok(blocks.concat())
}

/// Empirical CDF `P(G(X) <= h)` of the model output at each threshold.
pub fn plug_in_cdf<M: Model + ?Sized>(
    inputs: &[InputDistribution],
    model: &M,
    thresholds: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>, SamplingError> {
    let mut outputs = sample_outputs(inputs, model, n, seed)?;
    outputs.sort_by(f64::total_cmp);
    Ok(thresholds
        .iter()
        .map(|&h| {
            let below = outputs.partition_point(|v| *v <= h);
            (h, below as f64 / n.max(1) as f64)
        })
        .collect())
}
