//! Executes a validated problem and writes its result files.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ouq_core::models::{HydraulicModel, IdentityModel, LinearModel};
use ouq_core::{
    robust_quantile_with, Decoder, EnvelopeCurve, Executor, Model, RobustQuantileResult,
    Sequential,
};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cache::CachedModel;
use crate::config::{BuiltinModel, ConfigError, Problem, ProblemConfig, Task};
use crate::external::CommandModel;
use crate::parallel::{resolve_parallelism, RayonExecutor};

/// Environment variable overriding the worker thread count.
pub const PARALLELISM_ENV: &str = "OUQ_PARALLELISM";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0} [{kind}]", kind = .0.kind())]
    Engine(#[from] ouq_core::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start worker threads: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    /// 1 for invalid configurations, 2 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub total_model_evals: u64,
    pub config_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Reads and validates a configuration file.
pub fn load(path: &Path) -> Result<(Problem, Vec<u8>), ConfigError> {
    let (config, bytes) = ProblemConfig::read(path)?;
    Ok((config.validate()?, bytes))
}

fn parallelism_override() -> Option<usize> {
    std::env::var(PARALLELISM_ENV).ok()?.trim().parse().ok()
}

fn build_model(problem: &Problem, threads: usize) -> Box<dyn Model> {
    let m = &problem.config.model;
    let dim = problem.specs.len();
    if let Some(argv) = &m.command {
        return Box::new(if m.concurrent {
            CommandModel::concurrent(argv.clone(), dim, threads)
        } else {
            CommandModel::serial(argv.clone(), dim)
        });
    }
    match m.builtin.expect("validated model has a builtin") {
        BuiltinModel::Hydraulic => Box::new(HydraulicModel),
        BuiltinModel::Identity => Box::new(IdentityModel),
        BuiltinModel::Sum => Box::new(LinearModel::new(vec![1.0; dim])),
        BuiltinModel::Linear => Box::new(LinearModel::new(m.scales.clone().unwrap_or_default())),
    }
}

/// Runs the configuration at `path`, reporting progress to `log`.
pub fn run(path: &Path, log: &mut dyn Write) -> Result<RunSummary, RunError> {
    let (problem, bytes) = load(path)?;
    run_problem(&problem, &bytes, parallelism_override(), log)
}

/// Runs an already validated problem. `config_bytes` is the document the
/// digest is computed from.
pub fn run_problem(
    problem: &Problem,
    config_bytes: &[u8],
    parallelism: Option<usize>,
    log: &mut dyn Write,
) -> Result<RunSummary, RunError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let digest = sha256_hex(config_bytes);
    let threads = resolve_parallelism(problem.config.parallelism, parallelism);
    let model = build_model(problem, threads);
    let decoder = Decoder::new(&problem.specs)?;
    let _ = writeln!(
        log,
        "ouq: {} inputs, {} optimizer parameters, {} model calls per objective, {} threads",
        problem.specs.len(),
        decoder.dimension(),
        decoder.grid_size(),
        threads
    );

    let capacity = problem.config.memo_capacity;
    let cached = CachedModel::new(model, capacity);
    let model: &dyn Model = if capacity > 0 { &cached } else { cached.inner() };
    let outcome = if threads > 1 && model.is_concurrent() {
        execute(problem, &decoder, model, &RayonExecutor::new(threads)?, log)?
    } else {
        execute(problem, &decoder, model, &Sequential, log)?
    };

    let prefix = &problem.config.output;
    let mut files = Vec::new();
    let total = match &outcome {
        Outcome::Sweep(curve) => {
            let total = curve.model_evaluations();
            files.push(write_file(prefix, "envelope.csv", &envelope_csv(curve, &digest, total))?);
            files.push(write_file(prefix, "argmin.json", &argmin_json(problem, curve, &digest, total))?);
            total
        }
        Outcome::Quantile(q) => {
            files.push(write_file(prefix, "quantile.json", &quantile_json(q, &digest))?);
            q.model_evaluations
        }
    };
    let finished = SystemTime::now();
    let meta = Meta {
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: &digest,
        started_unix_s: unix_seconds(started),
        finished_unix_s: unix_seconds(finished),
        elapsed_s: clock.elapsed().as_secs_f64(),
        threads,
        total_model_evals: total,
        model_calls: if capacity > 0 { cached.misses() } else { total },
        memo_hits: cached.hits(),
    };
    files.push(write_file(prefix, "meta.json", &to_json(&meta))?);
    let _ = writeln!(log, "ouq: done, {total} model evaluations");
    Ok(RunSummary {
        files,
        total_model_evals: total,
        config_sha256: digest,
    })
}

enum Outcome {
    Sweep(EnvelopeCurve),
    Quantile(RobustQuantileResult),
}

fn execute<X: Executor>(
    problem: &Problem,
    decoder: &Decoder,
    model: &dyn Model,
    executor: &X,
    log: &mut dyn Write,
) -> Result<Outcome, ouq_core::Error> {
    match &problem.task {
        Task::Sweep(thresholds) => {
            let n = thresholds.len();
            let mut evals = 0u64;
            let curve = ouq_core::envelope::sweep_with_progress(
                decoder,
                model,
                thresholds,
                &problem.optimizer,
                executor,
                |k, m| {
                    evals += m.model_evaluations;
                    let _ = writeln!(
                        log,
                        "[{}/{n}] h={} inf_cdf={} rejections={} model_evals={evals}",
                        k + 1,
                        thresholds[k],
                        m.value,
                        m.rejections
                    );
                },
            )?;
            Ok(Outcome::Sweep(curve))
        }
        &Task::Quantile { alpha, search, resolution } => {
            let _ = writeln!(log, "quantile search alpha={alpha} in [{}, {}]", search.0, search.1);
            let q = robust_quantile_with(
                decoder,
                model,
                alpha,
                search,
                &problem.optimizer,
                executor,
                resolution,
            )?;
            let _ = writeln!(
                log,
                "quantile={} bracket=[{}, {}] iterations={} model_evals={}",
                q.quantile, q.bracket.0, q.bracket.1, q.iterations, q.model_evaluations
            );
            Ok(Outcome::Quantile(q))
        }
    }
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn output_path(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}.{suffix}"))
}

fn write_file(prefix: &str, suffix: &str, contents: &str) -> Result<PathBuf, RunError> {
    let path = output_path(prefix, suffix);
    let fail = |source| RunError::Output {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(fail)?;
    }
    std::fs::write(&path, contents).map_err(fail)?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result types serialize");
    s.push('\n');
    s
}

pub fn envelope_csv(curve: &EnvelopeCurve, digest: &str, total: u64) -> String {
    let mut s = format!("# config_sha256={digest}\n# total_model_evals={total}\nh,inf_cdf,raw_inf_cdf,model_evals\n");
    for p in curve.points() {
        let _ = writeln!(s, "{},{},{},{}", p.threshold, p.inf_cdf, p.raw_inf_cdf, p.model_evaluations);
    }
    s
}

#[derive(Serialize)]
struct Meta<'a> {
    version: &'a str,
    config_sha256: &'a str,
    started_unix_s: f64,
    finished_unix_s: f64,
    elapsed_s: f64,
    threads: usize,
    total_model_evals: u64,
    /// Evaluations that reached the model after the memo.
    model_calls: u64,
    memo_hits: u64,
}

#[derive(Serialize)]
struct InputMeasure<'a> {
    name: &'a str,
    atoms: &'a [f64],
    weights: &'a [f64],
}

#[derive(Serialize)]
struct ArgminEntry<'a> {
    h: f64,
    inf_cdf: f64,
    raw_inf_cdf: f64,
    inputs: Vec<InputMeasure<'a>>,
}

#[derive(Serialize)]
struct ArgminFile<'a> {
    config_sha256: &'a str,
    total_model_evals: u64,
    thresholds: Vec<ArgminEntry<'a>>,
}

fn argmin_json(problem: &Problem, curve: &EnvelopeCurve, digest: &str, total: u64) -> String {
    let thresholds = curve
        .points()
        .iter()
        .map(|p| ArgminEntry {
            h: p.threshold,
            inf_cdf: p.inf_cdf,
            raw_inf_cdf: p.raw_inf_cdf,
            inputs: problem
                .names
                .iter()
                .zip(p.argmin.components())
                .map(|(name, m)| InputMeasure {
                    name,
                    atoms: m.atoms(),
                    weights: m.weights(),
                })
                .collect(),
        })
        .collect();
    to_json(&ArgminFile {
        config_sha256: digest,
        total_model_evals: total,
        thresholds,
    })
}

#[derive(Serialize)]
struct QuantileFile<'a> {
    config_sha256: &'a str,
    total_model_evals: u64,
    alpha: f64,
    quantile: f64,
    bracket: [f64; 2],
    bracket_inf_cdf: [f64; 2],
    iterations: usize,
}

fn quantile_json(q: &RobustQuantileResult, digest: &str) -> String {
    to_json(&QuantileFile {
        config_sha256: digest,
        total_model_evals: q.model_evaluations,
        alpha: q.alpha,
        quantile: q.quantile,
        bracket: [q.bracket.0, q.bracket.1],
        bracket_inf_cdf: [q.bracket_values.0, q.bracket_values.1],
        iterations: q.iterations,
    })
}
