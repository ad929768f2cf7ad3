//! Minimal-CDF envelope and robust quantile.
//!
//! The largest `alpha`-quantile over the admissible class equals the
//! generalized inverse of the pointwise infimum of the CDFs,
//! `Q(alpha) = inf { h : inf_mu F_mu(h) >= alpha }`, so the robust quantile
//! is found by bisection on `h` with `min_pof` as a monotone oracle.

use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::engine::{min_pof_with, Decoder, MinPof, Model, ProductMeasure};
use crate::error::{Error, Result};
use crate::moments::MomentSpec;
use crate::optimize::{Executor, OptimizerConfig, Sequential};

/// Share of the DE population seeded from the previous threshold's argmin.
pub const WARM_START_FRACTION: f64 = 0.2;

/// Default bisection resolution relative to the search interval width.
pub const DEFAULT_RELATIVE_RESOLUTION: f64 = 1e-3;

pub const MAX_BISECTION_STEPS: usize = 20;

const MAX_WIDENINGS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint {
    pub threshold: f64,
    /// After isotonic repair.
    pub inf_cdf: f64,
    /// As returned by the optimizer.
    pub raw_inf_cdf: f64,
    pub argmin: ProductMeasure,
    pub point: Vec<f64>,
    pub model_evaluations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCurve {
    points: Vec<EnvelopePoint>,
}

impl EnvelopeCurve {
    pub fn points(&self) -> &[EnvelopePoint] {
        &self.points
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.threshold).collect()
    }

    pub fn inf_cdf(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.inf_cdf).collect()
    }

    pub fn model_evaluations(&self) -> u64 {
        self.points.iter().map(|p| p.model_evaluations).sum()
    }

    /// Largest upward move made by the isotonic repair.
    pub fn max_repair(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.inf_cdf - p.raw_inf_cdf)
            .fold(0.0, f64::max)
    }

    /// Smallest sampled threshold whose envelope value reaches `alpha`.
    pub fn quantile(&self, alpha: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.inf_cdf >= alpha)
            .map(|p| p.threshold)
    }
}

/// Running maximum from the left, clamped to `[0, 1]`.
pub fn isotonic_repair(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut running = 0.0f64;
    for &v in raw {
        running = running.max(v.clamp(0.0, 1.0));
        out.push(running);
    }
    out
}

fn threshold_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Warm-start population: the previous argmin plus Gaussian perturbations
/// of it (5% of each box width), clipped into the boxes.
pub fn warm_start_seeds(point: &[f64], boxes: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7761_726d);
    let mut seeds = Vec::with_capacity(count);
    for k in 0..count {
        if k == 0 {
            seeds.push(point.to_vec());
            continue;
        }
        let s = point
            .iter()
            .zip(boxes)
            .map(|(&x, &(lo, hi))| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (x + 0.05 * (hi - lo) * z).clamp(lo, hi)
            })
            .collect();
        seeds.push(s);
    }
    seeds
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.iter().any(|h| h.is_nan()) {
        return Err(Error::InvalidArgument("thresholds must not be NaN"));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("thresholds must be sorted ascending"));
    }
    Ok(())
}

/// Assembles a curve from per-threshold optima (in threshold order).
pub fn curve_from_optima(thresholds: &[f64], optima: Vec<MinPof>) -> EnvelopeCurve {
    let raw: Vec<f64> = optima.iter().map(|m| m.value).collect();
    let repaired = isotonic_repair(&raw);
    let points = thresholds
        .iter()
        .zip(optima)
        .zip(repaired)
        .map(|((&threshold, m), inf_cdf)| EnvelopePoint {
            threshold,
            inf_cdf,
            raw_inf_cdf: m.value,
            argmin: m.measure,
            point: m.point,
            model_evaluations: m.model_evaluations,
        })
        .collect();
    EnvelopeCurve { points }
}

/// Sweeps `thresholds` in order, warm-starting each optimization from the
/// previous argmin.
pub fn sweep_with<M: Model + ?Sized, X: Executor>(
    decoder: &Decoder,
    model: &M,
    thresholds: &[f64],
    config: &OptimizerConfig,
    executor: &X,
) -> Result<EnvelopeCurve> {
    sweep_with_progress(decoder, model, thresholds, config, executor, |_, _| {})
}

/// [`sweep_with`] reporting each finished threshold to `progress`.
pub fn sweep_with_progress<M: Model + ?Sized, X: Executor>(
    decoder: &Decoder,
    model: &M,
    thresholds: &[f64],
    config: &OptimizerConfig,
    executor: &X,
    mut progress: impl FnMut(usize, &MinPof),
) -> Result<EnvelopeCurve> {
    check_thresholds(thresholds)?;
    let boxes = decoder.boxes();
    let population = config.population_for(boxes.len());
    let warm = (WARM_START_FRACTION * population as f64) as usize;
    let mut optima: Vec<MinPof> = Vec::with_capacity(thresholds.len());
    for (k, &h) in thresholds.iter().enumerate() {
        let local = OptimizerConfig {
            seed: threshold_seed(config.seed, k),
            ..config.clone()
        };
        let seeds = match optima.last() {
            Some(prev) if warm > 0 => warm_start_seeds(&prev.point, &boxes, warm, local.seed),
            _ => Vec::new(),
        };
        let m = min_pof_with(decoder, model, h, &local, executor, &seeds)?;
        progress(k, &m);
        optima.push(m);
    }
    Ok(curve_from_optima(thresholds, optima))
}

pub fn sweep<M: Model + ?Sized>(
    specs: &[MomentSpec],
    model: &M,
    thresholds: &[f64],
    config: &OptimizerConfig,
) -> Result<EnvelopeCurve> {
    let decoder = Decoder::new(specs)?;
    sweep_with(&decoder, model, thresholds, config, &Sequential)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustQuantileResult {
    pub alpha: f64,
    /// Upper edge of the final bracket.
    pub quantile: f64,
    pub bracket: (f64, f64),
    /// Envelope estimates at the bracket edges.
    pub bracket_values: (f64, f64),
    pub iterations: usize,
    pub model_evaluations: u64,
}

/// Bisection for the robust `alpha`-quantile.
///
/// The search interval is widened (doubling its width, up to 8 times per
/// side) until `inf_cdf(lo) < alpha <= inf_cdf(hi)`. `resolution` defaults to
/// `1e-3 * (hi - lo)` of the requested interval; at most 20 bisection steps
/// are taken.
pub fn robust_quantile_with<M: Model + ?Sized, X: Executor>(
    decoder: &Decoder,
    model: &M,
    alpha: f64,
    search: (f64, f64),
    config: &OptimizerConfig,
    executor: &X,
    resolution: Option<f64>,
) -> Result<RobustQuantileResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument("alpha must lie in (0, 1)"));
    }
    let (mut lo, mut hi) = search;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument("search interval must be finite with lo < hi"));
    }
    let resolution = resolution.unwrap_or(DEFAULT_RELATIVE_RESOLUTION * (hi - lo));
    if !(resolution > 0.0) {
        return Err(Error::InvalidArgument("resolution must be positive"));
    }
    let mut evals = 0u64;
    let mut calls = 0usize;
    let mut oracle = |h: f64, seeds: &[Vec<f64>]| -> Result<MinPof> {
        let local = OptimizerConfig {
            seed: threshold_seed(config.seed, calls),
            ..config.clone()
        };
        calls += 1;
        let m = min_pof_with(decoder, model, h, &local, executor, seeds)?;
        evals += m.model_evaluations;
        Ok(m)
    };

    let mut at_lo = oracle(lo, &[])?;
    let mut at_hi = oracle(hi, &[])?;
    let mut width = hi - lo;
    let mut widenings = 0;
    while at_lo.value >= alpha {
        if widenings == MAX_WIDENINGS {
            return Err(bracket_failure(alpha, lo, hi, &at_lo, &at_hi));
        }
        lo -= width;
        width *= 2.0;
        widenings += 1;
        at_lo = oracle(lo, &[])?;
    }
    let mut width = hi - lo;
    let mut widenings = 0;
    while at_hi.value < alpha {
        if widenings == MAX_WIDENINGS {
            return Err(bracket_failure(alpha, lo, hi, &at_lo, &at_hi));
        }
        hi += width;
        width *= 2.0;
        widenings += 1;
        at_hi = oracle(hi, &[])?;
    }

    let mut iterations = 0;
    while hi - lo > resolution && iterations < MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let seeds = [at_lo.point.clone(), at_hi.point.clone()];
        let m = oracle(mid, &seeds)?;
        iterations += 1;
        if m.value >= alpha {
            hi = mid;
            at_hi = m;
        } else {
            lo = mid;
            at_lo = m;
        }
    }
    Ok(RobustQuantileResult {
        alpha,
        quantile: hi,
        bracket: (lo, hi),
        bracket_values: (at_lo.value, at_hi.value),
        iterations,
        model_evaluations: evals,
    })
}

fn bracket_failure(alpha: f64, lo: f64, hi: f64, at_lo: &MinPof, at_hi: &MinPof) -> Error {
    Error::BracketFailure {
        alpha,
        lo,
        hi,
        lo_value: at_lo.value,
        hi_value: at_hi.value,
    }
}

pub fn robust_quantile<M: Model + ?Sized>(
    specs: &[MomentSpec],
    model: &M,
    alpha: f64,
    search: (f64, f64),
    config: &OptimizerConfig,
    resolution: Option<f64>,
) -> Result<RobustQuantileResult> {
    let decoder = Decoder::new(specs)?;
    robust_quantile_with(&decoder, model, alpha, search, config, &Sequential, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::IdentityModel;
    use alloc::vec;

    #[test]
    fn repair_is_running_max() {
        assert_eq!(isotonic_repair(&[0.1, 0.05, 0.3, 0.2, 1.2]), vec![0.1, 0.1, 0.3, 0.3, 1.0]);
        assert_eq!(isotonic_repair(&[]), Vec::<f64>::new());
    }

    #[test]
    fn unsorted_thresholds_rejected() {
        let specs = [MomentSpec::equality(0.0, 1.0, vec![0.5]).unwrap()];
        assert!(sweep(&specs, &IdentityModel, &[0.5, 0.2], &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn below_model_range_is_zero() {
        let specs = [MomentSpec::equality(0.0, 1.0, vec![0.5]).unwrap()];
        let curve = sweep(&specs, &IdentityModel, &[-1.0, -0.5], &OptimizerConfig::default()).unwrap();
        assert_eq!(curve.inf_cdf(), vec![0.0, 0.0]);
        assert!(curve.points().iter().all(|p| p.raw_inf_cdf.is_sign_positive()));
    }

    #[test]
    fn alpha_validated() {
        let specs = [MomentSpec::equality(0.0, 1.0, vec![0.5]).unwrap()];
        for alpha in [0.0, 1.0, f64::NAN] {
            assert!(robust_quantile(&specs, &IdentityModel, alpha, (0.0, 1.0), &OptimizerConfig::default(), None).is_err());
        }
    }

    #[test]
    fn warm_seeds_stay_in_boxes() {
        let boxes = [(0.0, 1.0), (0.4, 0.6)];
        let seeds = warm_start_seeds(&[0.99, 0.41], &boxes, 12, 3);
        assert_eq!(seeds.len(), 12);
        assert_eq!(seeds[0], vec![0.99, 0.41]);
        for s in &seeds {
            assert!((0.0..=1.0).contains(&s[0]) && (0.4..=0.6).contains(&s[1]));
        }
    }
}
