//! JSON problem configuration and its validation.

use std::collections::BTreeSet;
use std::path::Path;

use ouq_core::{Error as CoreError, MomentSpec, OptimizerConfig, Strategy};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::DEFAULT_CAPACITY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub inputs: Vec<InputConfig>,
    pub model: ModelConfig,
    pub mode: ModeConfig,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub seed: u64,
    /// Upper bound on worker threads; defaults to the processor count.
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Path prefix of the result files.
    pub output: String,
    /// Entries of the model-evaluation memo; 0 disables it.
    #[serde(default = "default_memo_capacity")]
    pub memo_capacity: usize,
}

fn default_memo_capacity() -> usize {
    DEFAULT_CAPACITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub name: String,
    pub bounds: [f64; 2],
    pub moments: MomentsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MomentsConfig {
    /// Raw moments of orders `1..=N`.
    Equality(Vec<f64>),
    Interval { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinModel {
    Hydraulic,
    Identity,
    /// Sum of all inputs.
    Sum,
    /// `sum scales[i] * x[i]`; needs `scales`.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub builtin: Option<BuiltinModel>,
    /// Program and arguments of an external model.
    #[serde(default)]
    pub command: Option<Vec<String>>,
    /// Whether several copies of the command may run at once.
    #[serde(default)]
    pub concurrent: bool,
    #[serde(default)]
    pub scales: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeConfig {
    Sweep(SweepConfig),
    Quantile(QuantileConfig),
}

/// Either an explicit threshold list or `count` evenly spaced thresholds
/// from `lo` to `hi` inclusive.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub thresholds: Option<Vec<f64>>,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantileConfig {
    pub alpha: f64,
    pub search: [f64; 2],
    #[serde(default)]
    pub resolution: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    DifferentialEvolution,
    SimulatedAnnealing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub strategy: StrategyName,
    pub population: Option<usize>,
    pub max_iterations: usize,
    pub de_weight: f64,
    pub de_crossover: f64,
    pub target_tolerance: f64,
    pub stall_generations: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            strategy: StrategyName::DifferentialEvolution,
            population: d.population,
            max_iterations: d.max_iterations,
            de_weight: d.de_weight,
            de_crossover: d.de_crossover,
            target_tolerance: d.target_tolerance,
            stall_generations: d.stall_generations,
        }
    }
}

impl OptimizerSettings {
    pub fn to_config(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            strategy: match self.strategy {
                StrategyName::DifferentialEvolution => Strategy::DifferentialEvolution,
                StrategyName::SimulatedAnnealing => Strategy::SimulatedAnnealing,
            },
            population: self.population,
            max_iterations: self.max_iterations,
            de_weight: self.de_weight,
            de_crossover: self.de_crossover,
            seed,
            target_tolerance: self.target_tolerance,
            stall_generations: self.stall_generations,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("input {name:?}: {source} [{kind}]", kind = source.kind())]
    Input {
        name: String,
        #[source]
        source: CoreError,
    },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Sweep(Vec<f64>),
    Quantile {
        alpha: f64,
        search: (f64, f64),
        resolution: Option<f64>,
    },
}

/// A configuration that passed validation, with its constraints built.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ProblemConfig,
    pub names: Vec<String>,
    pub specs: Vec<MomentSpec>,
    pub task: Task,
    pub optimizer: OptimizerConfig,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok((serde_json::from_slice(&bytes)?, bytes))
    }

    /// Number of model inputs the configured model expects, when fixed.
    fn model_dim(&self) -> Result<Option<usize>, ConfigError> {
        let m = &self.model;
        match (m.builtin, &m.command) {
            (Some(_), Some(_)) => Err(invalid("model: give either `builtin` or `command`, not both")),
            (None, None) => Err(invalid("model: one of `builtin` or `command` is required")),
            (None, Some(argv)) => {
                if argv.is_empty() || argv[0].is_empty() {
                    return Err(invalid("model: `command` must name a program"));
                }
                if m.scales.is_some() {
                    return Err(invalid("model: `scales` applies to the linear builtin only"));
                }
                Ok(None)
            }
            (Some(builtin), None) => {
                if m.concurrent {
                    return Err(invalid("model: `concurrent` applies to commands only"));
                }
                match (builtin, &m.scales) {
                    (BuiltinModel::Linear, Some(s)) => {
                        if s.iter().any(|v| !v.is_finite()) {
                            return Err(invalid("model: scales must be finite"));
                        }
                        Ok(Some(s.len()))
                    }
                    (BuiltinModel::Linear, None) => Err(invalid("model: the linear builtin needs `scales`")),
                    (_, Some(_)) => Err(invalid("model: `scales` applies to the linear builtin only")),
                    (BuiltinModel::Hydraulic, None) => Ok(Some(4)),
                    (BuiltinModel::Identity, None) => Ok(Some(1)),
                    (BuiltinModel::Sum, None) => Ok(None),
                }
            }
        }
    }

    /// Checks the whole document before anything is computed.
    pub fn validate(self) -> Result<Problem, ConfigError> {
        if self.inputs.is_empty() {
            return Err(invalid("at least one input is required"));
        }
        let mut seen = BTreeSet::new();
        let mut specs = Vec::with_capacity(self.inputs.len());
        for input in &self.inputs {
            if input.name.is_empty() {
                return Err(invalid("input names must not be empty"));
            }
            if !seen.insert(input.name.as_str()) {
                return Err(invalid(format!("duplicate input name {:?}", input.name)));
            }
            let [lower, upper] = input.bounds;
            let spec = match &input.moments {
                MomentsConfig::Equality(c) if c.is_empty() => {
                    return Err(invalid(format!("input {:?}: at least one moment is required", input.name)))
                }
                MomentsConfig::Equality(c) => MomentSpec::equality(lower, upper, c.clone()),
                MomentsConfig::Interval { lower: lo, upper: hi } if lo.is_empty() || lo.len() != hi.len() => {
                    return Err(invalid(format!(
                        "input {:?}: interval bounds need the same non-zero number of moments",
                        input.name
                    )))
                }
                MomentsConfig::Interval { lower: lo, upper: hi } => {
                    MomentSpec::interval(lower, upper, lo.clone(), hi.clone())
                }
            };
            specs.push(spec.map_err(|source| ConfigError::Input {
                name: input.name.clone(),
                source,
            })?);
        }
        if let Some(dim) = self.model_dim()? {
            if dim != self.inputs.len() {
                return Err(invalid(format!(
                    "model takes {dim} inputs but {} are configured",
                    self.inputs.len()
                )));
            }
        }
        let task = match &self.mode {
            ModeConfig::Sweep(s) => Task::Sweep(sweep_thresholds(s)?),
            ModeConfig::Quantile(q) => {
                if !(q.alpha > 0.0 && q.alpha < 1.0) {
                    return Err(invalid("quantile: alpha must lie in (0, 1)"));
                }
                let [lo, hi] = q.search;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(invalid("quantile: search must be a finite interval with lo < hi"));
                }
                if let Some(r) = q.resolution {
                    if !(r > 0.0 && r.is_finite()) {
                        return Err(invalid("quantile: resolution must be positive"));
                    }
                }
                Task::Quantile {
                    alpha: q.alpha,
                    search: (lo, hi),
                    resolution: q.resolution,
                }
            }
        };
        let optimizer = self.optimizer.to_config(self.seed);
        optimizer
            .validate()
            .map_err(|e| invalid(format!("optimizer: {e}")))?;
        if self.parallelism == Some(0) {
            return Err(invalid("parallelism must be at least 1"));
        }
        if self.output.is_empty() {
            return Err(invalid("output prefix must not be empty"));
        }
        Ok(Problem {
            names: self.inputs.iter().map(|i| i.name.clone()).collect(),
            specs,
            task,
            optimizer,
            config: self,
        })
    }
}

fn sweep_thresholds(s: &SweepConfig) -> Result<Vec<f64>, ConfigError> {
    let thresholds = match (&s.thresholds, s.lo, s.hi, s.count) {
        (Some(t), None, None, None) => t.clone(),
        (None, Some(lo), Some(hi), Some(count)) => {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) || count == 0 {
                return Err(invalid("sweep: need finite lo <= hi and count >= 1"));
            }
            if count == 1 {
                vec![lo]
            } else {
                let step = (hi - lo) / (count - 1) as f64;
                (0..count)
                    .map(|i| if i + 1 == count { hi } else { lo + step * i as f64 })
                    .collect()
            }
        }
        _ => return Err(invalid("sweep: give either `thresholds` or all of `lo`, `hi`, `count`")),
    };
    if thresholds.is_empty() {
        return Err(invalid("sweep: at least one threshold is required"));
    }
    if thresholds.iter().any(|h| !h.is_finite()) {
        return Err(invalid("sweep: thresholds must be finite"));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("sweep: thresholds must be sorted ascending"));
    }
    Ok(thresholds)
}
