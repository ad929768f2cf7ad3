//! Standard-library companion to `ouq-core`: JSON problem files, the
//! command-line runner, a threaded executor, an evaluation memo, external
//! command models, and Monte Carlo baselines.

pub mod cache;
pub mod config;
pub mod external;
pub mod parallel;
pub mod presets;
pub mod runner;
pub mod sampling;

pub use cache::CachedModel;
pub use config::{ConfigError, Problem, ProblemConfig};
pub use external::CommandModel;
pub use parallel::RayonExecutor;
pub use runner::{run, RunError, RunSummary};
