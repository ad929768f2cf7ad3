//! Box-constrained black-box minimization.
//!
//! Differential evolution (DE/rand/1/bin) is the default strategy; simulated
//! annealing is provided for cross-checks. Every random draw comes from a
//! ChaCha stream keyed by `(seed, generation, member)`, and selection walks
//! the evaluated batch in index order, so results do not depend on how an
//! [`Executor`] schedules evaluations.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    DifferentialEvolution,
    SimulatedAnnealing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub strategy: Strategy,
    /// `None` selects `max(15 * dim, 60)`.
    pub population: Option<usize>,
    pub max_iterations: usize,
    /// DE differential weight `F`.
    pub de_weight: f64,
    /// DE crossover probability `CR`.
    pub de_crossover: f64,
    pub seed: u64,
    pub target_tolerance: f64,
    pub stall_generations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::DifferentialEvolution,
            population: None,
            max_iterations: 300,
            de_weight: 0.7,
            de_crossover: 0.9,
            seed: 0,
            target_tolerance: 1e-6,
            stall_generations: 40,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn population_for(&self, dim: usize) -> usize {
        self.population.unwrap_or_else(|| (15 * dim).max(60))
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if let Some(n) = self.population {
            if n < 4 {
                return Err("population must be at least 4");
            }
        }
        if !(self.de_weight > 0.0 && self.de_weight < 2.0) {
            return Err("de_weight must lie in (0, 2)");
        }
        if !(0.0..=1.0).contains(&self.de_crossover) {
            return Err("de_crossover must lie in [0, 1]");
        }
        if !(self.target_tolerance >= 0.0) {
            return Err("target_tolerance must be non-negative");
        }
        Ok(())
    }
}

/// A function to minimize. Penalty values are allowed; non-finite values are
/// treated as `+inf`.
pub trait Objective: Sync {
    type Error: Send;

    fn evaluate(&self, x: &[f64]) -> Result<f64, Self::Error>;
}

impl<F, E> Objective for F
where
    F: Fn(&[f64]) -> Result<f64, E> + Sync,
    E: Send,
{
    type Error = E;

    fn evaluate(&self, x: &[f64]) -> Result<f64, E> {
        self(x)
    }
}

/// Evaluates a batch of candidate points; results must be in input order.
pub trait Executor {
    fn evaluate_batch<O: Objective>(
        &self,
        objective: &O,
        points: &[Vec<f64>],
    ) -> Vec<Result<f64, O::Error>>;
}

/// In-order, single-threaded evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn evaluate_batch<O: Objective>(
        &self,
        objective: &O,
        points: &[Vec<f64>],
    ) -> Vec<Result<f64, O::Error>> {
        points.iter().map(|p| objective.evaluate(p)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub value: f64,
    pub point: Vec<f64>,
    pub evaluations: usize,
    pub iterations: usize,
    /// Best value after initialization and after each generation.
    pub history: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum OptimizeError<E> {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("objective failed at {point:?}")]
    Objective {
        point: Vec<f64>,
        #[source]
        source: E,
    },
}

const TAG_INIT: u64 = 0x696e_6974;
const TAG_DE: u64 = 0x6465;
const TAG_SA: u64 = 0x7361;

fn member_rng(seed: u64, generation: u64, member: u64, tag: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&generation.to_le_bytes());
    key[16..24].copy_from_slice(&member.to_le_bytes());
    key[24..].copy_from_slice(&tag.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn evaluate_all<O: Objective, X: Executor>(
    objective: &O,
    executor: &X,
    points: &[Vec<f64>],
) -> Result<Vec<f64>, OptimizeError<O::Error>> {
    let results = executor.evaluate_batch(objective, points);
    let mut out = Vec::with_capacity(results.len());
    for (point, r) in points.iter().zip(results) {
        match r {
            Ok(v) => out.push(sanitize(v)),
            Err(source) => {
                return Err(OptimizeError::Objective {
                    point: point.clone(),
                    source,
                })
            }
        }
    }
    Ok(out)
}

fn clip_into(x: &mut [f64], boxes: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(boxes) {
        *v = v.clamp(lo, hi);
    }
}

fn stalled(history: &[f64], window: usize, tol: f64) -> bool {
    if window == 0 || history.len() <= window {
        return false;
    }
    let last = history.len() - 1;
    history[last - window] - history[last] < tol
}

/// Minimizes `objective` over the product of `boxes`.
///
/// `seeds` are placed at the start of the initial population (clipped into
/// the boxes); simulated annealing starts from the first seed if given.
pub fn minimize<O: Objective, X: Executor>(
    objective: &O,
    boxes: &[(f64, f64)],
    config: &OptimizerConfig,
    executor: &X,
    seeds: &[Vec<f64>],
) -> Result<Minimum, OptimizeError<O::Error>> {
    config.validate().map_err(OptimizeError::InvalidConfig)?;
    if boxes.is_empty() {
        return Err(OptimizeError::InvalidConfig("at least one coordinate is required"));
    }
    if boxes
        .iter()
        .any(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo > hi)
    {
        return Err(OptimizeError::InvalidConfig("boxes must be finite with lo <= hi"));
    }
    if seeds.iter().any(|s| s.len() != boxes.len()) {
        return Err(OptimizeError::InvalidConfig("seed points must match the box dimension"));
    }
    match config.strategy {
        Strategy::DifferentialEvolution => differential_evolution(objective, boxes, config, executor, seeds),
        Strategy::SimulatedAnnealing => simulated_annealing(objective, boxes, config, executor, seeds),
    }
}

fn differential_evolution<O: Objective, X: Executor>(
    objective: &O,
    boxes: &[(f64, f64)],
    config: &OptimizerConfig,
    executor: &X,
    seeds: &[Vec<f64>],
) -> Result<Minimum, OptimizeError<O::Error>> {
    let dim = boxes.len();
    let np = config.population_for(dim);
    let mut population: Vec<Vec<f64>> = Vec::with_capacity(np);
    for i in 0..np {
        if let Some(seed_point) = seeds.get(i) {
            let mut x = seed_point.clone();
            clip_into(&mut x, boxes);
            population.push(x);
        } else {
            let mut rng = member_rng(config.seed, 0, i as u64, TAG_INIT);
            population.push(
                boxes
                    .iter()
                    .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
                    .collect(),
            );
        }
    }
    let mut fitness = evaluate_all(objective, executor, &population)?;
    let mut evaluations = np;
    let mut best = argmin(&fitness);
    let mut history = alloc::vec![fitness[best]];

    let mut iterations = 0;
    let mut trials: Vec<Vec<f64>> = Vec::with_capacity(np);
    for generation in 1..=config.max_iterations {
        trials.clear();
        for i in 0..np {
            let mut rng = member_rng(config.seed, generation as u64, i as u64, TAG_DE);
            let (r1, r2, r3) = distinct_triple(&mut rng, np, i);
            let forced = rng.gen_range(0..dim);
            let mut trial = population[i].clone();
            for j in 0..dim {
                let cross: f64 = rng.gen();
                if cross < config.de_crossover || j == forced {
                    trial[j] = population[r1][j]
                        + config.de_weight * (population[r2][j] - population[r3][j]);
                }
            }
            clip_into(&mut trial, boxes);
            trials.push(trial);
        }
        let values = evaluate_all(objective, executor, &trials)?;
        evaluations += np;
        for (i, (trial, value)) in trials.drain(..).zip(values).enumerate() {
            // ties keep the incumbent
            if value < fitness[i] {
                population[i] = trial;
                fitness[i] = value;
            }
        }
        best = argmin(&fitness);
        history.push(fitness[best]);
        iterations = generation;
        if stalled(&history, config.stall_generations, config.target_tolerance) {
            break;
        }
    }
    Ok(Minimum {
        value: fitness[best],
        point: population[best].clone(),
        evaluations,
        iterations,
        history,
    })
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

fn distinct_triple(rng: &mut ChaCha8Rng, np: usize, exclude: usize) -> (usize, usize, usize) {
    let mut pick = |taken: &[usize]| loop {
        let r = rng.gen_range(0..np);
        if r != exclude && !taken.contains(&r) {
            return r;
        }
    };
    let a = pick(&[]);
    let b = pick(&[a]);
    let c = pick(&[a, b]);
    (a, b, c)
}

fn reflect(mut v: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let width = hi - lo;
    for _ in 0..64 {
        if v < lo {
            v = 2.0 * lo - v;
        } else if v > hi {
            v = 2.0 * hi - v;
        } else {
            return v;
        }
        if libm::fabs(v - lo) > 4.0 * width && libm::fabs(v - hi) > 4.0 * width {
            break;
        }
    }
    v.clamp(lo, hi)
}

/// Geometric cooling `T_k = 0.95^k` with one Gaussian proposal chain; each
/// temperature level runs `population` proposals.
fn simulated_annealing<O: Objective, X: Executor>(
    objective: &O,
    boxes: &[(f64, f64)],
    config: &OptimizerConfig,
    executor: &X,
    seeds: &[Vec<f64>],
) -> Result<Minimum, OptimizeError<O::Error>> {
    const INITIAL_TEMPERATURE: f64 = 1.0;
    const COOLING: f64 = 0.95;
    const STEP: f64 = 0.1;

    let dim = boxes.len();
    let proposals = config.population_for(dim);
    let mut current = match seeds.first() {
        Some(s) => {
            let mut x = s.clone();
            clip_into(&mut x, boxes);
            x
        }
        None => {
            let mut rng = member_rng(config.seed, 0, 0, TAG_INIT);
            boxes
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
                .collect()
        }
    };
    let mut current_value = evaluate_all(objective, executor, core::slice::from_ref(&current))?[0];
    let mut evaluations = 1;
    let mut best = current.clone();
    let mut best_value = current_value;
    let mut history = alloc::vec![best_value];
    let mut iterations = 0;

    for level in 0..config.max_iterations {
        let temperature = INITIAL_TEMPERATURE * libm::pow(COOLING, level as f64);
        for m in 0..proposals {
            let mut rng = member_rng(config.seed, level as u64 + 1, m as u64, TAG_SA);
            let candidate: Vec<f64> = current
                .iter()
                .zip(boxes)
                .map(|(&x, &(lo, hi))| {
                    let z: f64 = rng.sample(StandardNormal);
                    reflect(x + STEP * (hi - lo) * z, lo, hi)
                })
                .collect();
            let value = evaluate_all(objective, executor, core::slice::from_ref(&candidate))?[0];
            evaluations += 1;
            let u: f64 = rng.gen();
            let accept = value < current_value
                || (value.is_finite() && u < libm::exp(-(value - current_value) / temperature));
            if accept {
                current = candidate;
                current_value = value;
                if current_value < best_value {
                    best_value = current_value;
                    best = current.clone();
                }
            }
        }
        history.push(best_value);
        iterations = level + 1;
        if stalled(&history, config.stall_generations, config.target_tolerance) {
            break;
        }
    }
    Ok(Minimum {
        value: best_value,
        point: best,
        evaluations,
        iterations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::convert::Infallible;

    fn sphere(x: &[f64]) -> Result<f64, Infallible> {
        Ok(x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum())
    }

    #[test]
    fn de_solves_sphere() {
        let boxes = [(0.0, 1.0); 3];
        let m = minimize(&sphere, &boxes, &OptimizerConfig::default(), &Sequential, &[]).unwrap();
        assert!(m.value <= 1e-8, "{}", m.value);
        for v in &m.point {
            assert!((v - 0.3).abs() < 1e-3);
        }
    }

    #[test]
    fn sa_improves_sphere() {
        let boxes = [(0.0, 1.0); 2];
        let config = OptimizerConfig {
            strategy: Strategy::SimulatedAnnealing,
            ..OptimizerConfig::default()
        };
        let m = minimize(&sphere, &boxes, &config, &Sequential, &[]).unwrap();
        assert!(m.value < 1e-3, "{}", m.value);
    }

    #[test]
    fn history_is_monotone_and_seeded_runs_repeat() {
        let boxes = [(-1.0, 2.0); 4];
        let config = OptimizerConfig::default().with_seed(7);
        let a = minimize(&sphere, &boxes, &config, &Sequential, &[]).unwrap();
        let b = minimize(&sphere, &boxes, &config, &Sequential, &[]).unwrap();
        assert_eq!(a, b);
        assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn plateau_terminates() {
        let step = |x: &[f64]| -> Result<f64, Infallible> { Ok(if x[0] < 0.5 { 1.0 } else { 0.0 }) };
        let config = OptimizerConfig {
            max_iterations: 25,
            stall_generations: 0,
            ..OptimizerConfig::default()
        };
        let m = minimize(&step, &[(0.0, 1.0)], &config, &Sequential, &[]).unwrap();
        assert_eq!(m.iterations, 25);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn objective_error_reports_point() {
        let failing = |x: &[f64]| -> Result<f64, &'static str> {
            if x[0] > 0.9 {
                Err("boom")
            } else {
                Ok(x[0])
            }
        };
        let err = minimize(&failing, &[(0.0, 1.0)], &OptimizerConfig::default(), &Sequential, &[])
            .unwrap_err();
        match err {
            OptimizeError::Objective { point, source } => {
                assert!(point[0] > 0.9);
                assert_eq!(source, "boom");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn candidates_stay_in_boxes() {
        let boxes = [(0.2, 0.4), (1e-9, 1.0 - 1e-9), (-3.0, -2.0)];
        let check = |x: &[f64]| -> Result<f64, &'static str> {
            for (v, (lo, hi)) in x.iter().zip(boxes.iter()) {
                if v < lo || v > hi {
                    return Err("out of box");
                }
            }
            Ok(x.iter().sum())
        };
        for strategy in [Strategy::DifferentialEvolution, Strategy::SimulatedAnnealing] {
            let config = OptimizerConfig {
                strategy,
                max_iterations: 50,
                ..OptimizerConfig::default()
            };
            minimize(&check, &boxes, &config, &Sequential, &[]).unwrap();
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let config = OptimizerConfig {
            population: Some(3),
            ..OptimizerConfig::default()
        };
        assert!(matches!(
            minimize(&sphere, &[(0.0, 1.0)], &config, &Sequential, &[]),
            Err(OptimizeError::InvalidConfig(_))
        ));
        let config = OptimizerConfig {
            de_weight: 2.0,
            ..OptimizerConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn reflection_stays_inside() {
        assert_eq!(reflect(1.2, 0.0, 1.0), 0.8);
        assert_eq!(reflect(-0.3, 0.0, 1.0), 0.3);
        assert_eq!(reflect(5.0, 1.0, 1.0), 1.0);
        let v = reflect(100.0, 0.0, 1.0);
        assert!((0.0..=1.0).contains(&v));
    }
}
