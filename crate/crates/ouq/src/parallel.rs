//! Thread-pool executor for optimizer batches.

use ouq_core::{Executor, Objective};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};

/// Evaluates optimizer candidates on a dedicated rayon pool. Results are
/// collected in input order, so runs are identical for any thread count.
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    pub fn new(threads: usize) -> Result<Self, ThreadPoolBuildError> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .thread_name(|i| format!("ouq-worker-{i}"))
            .build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn evaluate_batch<O: Objective>(
        &self,
        objective: &O,
        points: &[Vec<f64>],
    ) -> Vec<Result<f64, O::Error>> {
        self.pool
            .install(|| points.par_iter().map(|p| objective.evaluate(p)).collect())
    }
}

/// Number of worker threads: available processors, capped by `requested`
/// when given; `override_value` (from the environment) wins outright.
pub fn resolve_parallelism(requested: Option<usize>, override_value: Option<usize>) -> usize {
    if let Some(n) = override_value {
        return n.max(1);
    }
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match requested {
        Some(cap) => available.min(cap.max(1)),
        None => available,
    }
}
