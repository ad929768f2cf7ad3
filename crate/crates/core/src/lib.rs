//! Optimal uncertainty quantification over moment classes.
//!
//! Given a black-box model `G` of independent bounded inputs, each known only
//! through constraints on its first few moments, this crate computes the
//! lowest CDF of `G(X)` over every admissible input distribution and the
//! corresponding robust (largest) quantile.
//!
//! Extremal input distributions are discrete with at most `N_i + 1` atoms
//! per input. They are parameterized by canonical moments: fixing the first
//! `N_i` canonical moments enforces the constraints, and the next `N_i + 1`
//! range freely over `(0, 1)`, so every optimizer coordinate in the unit box
//! decodes to an admissible measure.
//!
//! The crate is `no_std` (with `alloc`). IO, parallel execution, sampling
//! baselines and the command-line front end live in the `ouq` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod engine;
pub mod envelope;
mod error;
pub mod linalg;
pub mod measure;
pub mod models;
pub mod moments;
pub mod optimize;

pub use engine::{
    decode_equality, decode_inequality, min_pof, min_pof_with, probability_of_failure, Decoder,
    EvalCost, GridEvaluation, MinPof, Model, ObjectiveSpace, ProductMeasure, INFEASIBLE_PENALTY,
};
pub use envelope::{
    isotonic_repair, robust_quantile, robust_quantile_with, sweep, sweep_with, EnvelopeCurve,
    EnvelopePoint, RobustQuantileResult,
};
pub use error::{Error, ModelError, Result};
pub use measure::{
    measure_from_canonical, star_polynomial, support_from_canonical, weights_from_support,
    DiscreteMeasure, StarPolynomial,
};
pub use moments::{
    affine_rescale_moments, canonical_to_moments, moments_to_canonical, zeta_sequence,
    CanonicalVector, MomentConstraint, MomentSpec,
};
pub use optimize::{minimize, Executor, Minimum, Objective, OptimizeError, OptimizerConfig, Sequential, Strategy};
