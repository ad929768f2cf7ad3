use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// Failure raised by a [`Model`](crate::engine::Model) implementation.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("model evaluation failed at {point:?}: {message}")]
pub struct ModelError {
    pub point: Vec<f64>,
    pub message: String,
}

impl ModelError {
    pub fn new(point: &[f64], message: impl Into<String>) -> Self {
        Self {
            point: point.to_vec(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input value")]
    NonFiniteInput,
    #[error("invalid interval: lower bound {lower} must be below upper bound {upper}")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("moment sequence leaves the moment space at order {order}")]
    OutsideMomentSpace { order: usize },
    #[error("moment sequence touches the moment-space boundary at order {order}")]
    BoundaryMoments { order: usize },
    #[error("interval constraint of order {order} has lower bound above upper bound")]
    InvertedMomentBox { order: usize },
    #[error("moment of order {order} is {value}, outside its box [{lower}, {upper}]")]
    MomentOutOfBox {
        order: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("invalid canonical moment vector: {0}")]
    InvalidCanonical(&'static str),
    #[error("star polynomial of degree {degree} needs {needed} zeta values, got {got}")]
    InsufficientZetas {
        degree: usize,
        needed: usize,
        got: usize,
    },
    #[error("support points collapsed into a cluster")]
    DegenerateCluster,
    #[error("Vandermonde system is singular (coincident atoms)")]
    SingularSystem,
    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("invalid discrete measure: {0}")]
    InvalidMeasure(&'static str),
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("input {input}: {source}")]
    Input {
        input: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("wrong constraint kind for input {input}: {expected} constraints required")]
    ConstraintKind { input: usize, expected: &'static str },
    #[error("model expects {expected} inputs, the problem has {got}")]
    ModelDimension { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no feasible parameter vector found")]
    Infeasible,
    #[error("cannot bracket level {alpha}: infimum CDF is {lo_value} at {lo} and {hi_value} at {hi}")]
    BracketFailure {
        alpha: f64,
        lo: f64,
        hi: f64,
        lo_value: f64,
        hi_value: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

impl Error {
    pub(crate) fn for_input(self, input: usize) -> Self {
        Error::Input {
            input,
            source: alloc::boxed::Box::new(self),
        }
    }

    /// Variant name of the innermost error, for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::NonFiniteInput => "NonFiniteInput",
            Error::InvalidBounds { .. } => "InvalidBounds",
            Error::OutsideMomentSpace { .. } => "OutsideMomentSpace",
            Error::BoundaryMoments { .. } => "BoundaryMoments",
            Error::InvertedMomentBox { .. } => "InvertedMomentBox",
            Error::MomentOutOfBox { .. } => "MomentOutOfBox",
            Error::InvalidCanonical(_) => "InvalidCanonical",
            Error::InsufficientZetas { .. } => "InsufficientZetas",
            Error::DegenerateCluster => "DegenerateCluster",
            Error::SingularSystem => "SingularSystem",
            Error::NegativeWeight { .. } => "NegativeWeight",
            Error::InvalidMeasure(_) => "InvalidMeasure",
            Error::ParameterCount { .. } => "ParameterCount",
            Error::Input { .. } => "Input",
            Error::ConstraintKind { .. } => "ConstraintKind",
            Error::ModelDimension { .. } => "ModelDimension",
            Error::Model(_) => "ModelEvaluationFailure",
            Error::Infeasible => "Infeasible",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }

    /// Strips any per-input wrapping.
    pub fn root(&self) -> &Error {
        match self {
            Error::Input { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
