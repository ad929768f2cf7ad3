//! Worst-case probability of failure over moment-constrained product measures.
//!
//! Optimizer coordinates are decoded into one discrete measure per input:
//! equality-constrained inputs take their `N + 1` free canonical moments,
//! interval-constrained inputs additionally take their `N` moments inside the
//! constraint boxes. The model is then evaluated on the tensor grid of atoms
//! and the weights of grid points with `G(x) <= h` are summed.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, ModelError, Result};
use crate::measure::{measure_from_canonical_prefix, DiscreteMeasure};
use crate::moments::{
    affine_rescale_moments, moments_to_canonical, MomentConstraint, MomentSpec, INTERIOR_EPS,
};
use crate::optimize::{minimize, Executor, Objective, OptimizeError, OptimizerConfig, Sequential};

/// Objective value for parameter vectors that do not decode to an admissible
/// measure. Lies outside `[0, 1]`.
pub const INFEASIBLE_PENALTY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalCost {
    #[default]
    Cheap,
    Expensive,
}

/// A deterministic black-box map from `R^p` to `R`.
pub trait Model: Send + Sync {
    fn input_dim(&self) -> usize;

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError>;

    /// Evaluates `points` (row-major, `input_dim` columns), appending to `out`.
    fn evaluate_batch(&self, points: &[f64], out: &mut Vec<f64>) -> Result<(), ModelError> {
        let dim = self.input_dim().max(1);
        for x in points.chunks_exact(dim) {
            out.push(self.evaluate(x)?);
        }
        Ok(())
    }

    fn cost(&self) -> EvalCost {
        EvalCost::Cheap
    }

    /// Whether concurrent calls are allowed. Serial models force sequential
    /// batch evaluation.
    fn is_concurrent(&self) -> bool {
        true
    }
}

macro_rules! forward_model {
    ($($ty:ty),*) => {$(
        impl<M: Model + ?Sized> Model for $ty {
            fn input_dim(&self) -> usize {
                (**self).input_dim()
            }
            fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
                (**self).evaluate(x)
            }
            fn evaluate_batch(&self, points: &[f64], out: &mut Vec<f64>) -> Result<(), ModelError> {
                (**self).evaluate_batch(points, out)
            }
            fn cost(&self) -> EvalCost {
                (**self).cost()
            }
            fn is_concurrent(&self) -> bool {
                (**self).is_concurrent()
            }
        }
    )*};
}

forward_model!(&M, Box<M>, Arc<M>);

/// One discrete measure per input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMeasure {
    components: Vec<DiscreteMeasure>,
}

impl ProductMeasure {
    pub fn new(components: Vec<DiscreteMeasure>) -> Self {
        Self { components }
    }

    pub fn components(&self) -> &[DiscreteMeasure] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Number of tensor-grid points, `prod_i len(component_i)`.
    pub fn grid_size(&self) -> usize {
        self.components.iter().map(|c| c.len()).product()
    }

    /// Grid points (row-major, last input varying fastest) and their product
    /// weights.
    pub fn grid(&self) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim();
        let size = self.grid_size();
        let mut points = Vec::with_capacity(size * dim);
        let mut weights = Vec::with_capacity(size);
        let mut index = alloc::vec![0usize; dim];
        for _ in 0..size {
            let mut w = 1.0;
            for (c, &k) in self.components.iter().zip(&index) {
                points.push(c.atoms()[k]);
                w *= c.weights()[k];
            }
            weights.push(w);
            for d in (0..dim).rev() {
                index[d] += 1;
                if index[d] < self.components[d].len() {
                    break;
                }
                index[d] = 0;
            }
        }
        (points, weights)
    }
}

/// Model outputs on the atom grid of a product measure.
///
/// Atoms of a [`DiscreteMeasure`] are strictly increasing, so the grid
/// points are pairwise distinct and each is evaluated exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEvaluation {
    weights: Vec<f64>,
    values: Vec<f64>,
}

impl GridEvaluation {
    pub fn new<M: Model + ?Sized>(pm: &ProductMeasure, model: &M) -> Result<Self> {
        if model.input_dim() != pm.dim() {
            return Err(Error::ModelDimension {
                expected: model.input_dim(),
                got: pm.dim(),
            });
        }
        let (points, weights) = pm.grid();
        let mut values = Vec::with_capacity(weights.len());
        model.evaluate_batch(&points, &mut values)?;
        if values.len() != weights.len() {
            return Err(ModelError::new(&[], "model returned the wrong number of values").into());
        }
        if let Some(bad) = values.iter().position(|v| v.is_nan()) {
            let dim = pm.dim();
            return Err(ModelError::new(&points[bad * dim..(bad + 1) * dim], "model returned NaN").into());
        }
        Ok(Self { weights, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `sum of weights with G(x) <= threshold`, clamped to `[0, 1]`.
    pub fn cdf(&self, threshold: f64) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&self.weights)
            .filter(|(v, _)| **v <= threshold)
            .fold(0.0, |acc, (_, w)| acc + w);
        s.clamp(0.0, 1.0)
    }
}

/// `P_mu(G(X) <= threshold)` for a product of discrete measures.
pub fn probability_of_failure<M: Model + ?Sized>(
    pm: &ProductMeasure,
    model: &M,
    threshold: f64,
) -> Result<f64> {
    Ok(GridEvaluation::new(pm, model)?.cdf(threshold))
}

#[derive(Debug, Clone, PartialEq)]
enum PreparedInput {
    Equality {
        lower: f64,
        upper: f64,
        moments01: Vec<f64>,
        canonical: Vec<f64>,
    },
    Interval {
        lower: f64,
        upper: f64,
        lowers: Vec<f64>,
        uppers: Vec<f64>,
    },
}

impl PreparedInput {
    fn new(spec: &MomentSpec) -> Result<Self> {
        let (lower, upper) = (spec.lower(), spec.upper());
        Ok(match spec.constraint() {
            MomentConstraint::Equality(values) => {
                let moments01 = affine_rescale_moments(values, lower, upper)?;
                let canonical = moments_to_canonical(&moments01)?;
                if let Some(order) = canonical.degeneracy_index() {
                    return Err(Error::BoundaryMoments { order });
                }
                PreparedInput::Equality {
                    lower,
                    upper,
                    moments01,
                    canonical: canonical.into_values(),
                }
            }
            MomentConstraint::Interval { lowers, uppers } => PreparedInput::Interval {
                lower,
                upper,
                lowers: lowers.clone(),
                uppers: uppers.clone(),
            },
        })
    }

    fn order(&self) -> usize {
        match self {
            PreparedInput::Equality { canonical, .. } => canonical.len(),
            PreparedInput::Interval { lowers, .. } => lowers.len(),
        }
    }

    fn parameter_count(&self) -> usize {
        match self {
            PreparedInput::Equality { .. } => self.order() + 1,
            PreparedInput::Interval { .. } => 2 * self.order() + 1,
        }
    }

    fn push_boxes(&self, boxes: &mut Vec<(f64, f64)>) {
        if let PreparedInput::Interval { lowers, uppers, .. } = self {
            boxes.extend(lowers.iter().copied().zip(uppers.iter().copied()));
        }
        boxes.extend(core::iter::repeat((INTERIOR_EPS, 1.0 - INTERIOR_EPS)).take(self.order() + 1));
    }

    fn decode(&self, params: &[f64]) -> Result<DiscreteMeasure> {
        match self {
            PreparedInput::Equality {
                lower,
                upper,
                moments01,
                canonical,
            } => measure_from_canonical_prefix(canonical, moments01, params, *lower, *upper),
            PreparedInput::Interval {
                lower,
                upper,
                lowers,
                uppers,
            } => {
                let n = lowers.len();
                let (raw, free) = params.split_at(n);
                for (j, ((&c, &lo), &hi)) in raw.iter().zip(lowers).zip(uppers).enumerate() {
                    if !(lo..=hi).contains(&c) {
                        return Err(Error::MomentOutOfBox {
                            order: j + 1,
                            value: c,
                            lower: lo,
                            upper: hi,
                        });
                    }
                }
                let moments01 = affine_rescale_moments(raw, *lower, *upper)?;
                let canonical = moments_to_canonical(&moments01)?;
                if let Some(order) = canonical.degeneracy_index() {
                    return Err(Error::BoundaryMoments { order });
                }
                measure_from_canonical_prefix(canonical.values(), &moments01, free, *lower, *upper)
            }
        }
    }
}

/// Maps optimizer coordinates to product measures for a fixed list of
/// input specifications.
///
/// Per input, equality mode reads `(p_{N+1}, .., p_{2N+1})`; interval mode
/// reads `(c_1, .., c_N, p_{N+1}, .., p_{2N+1})` with each raw moment `c_j`
/// boxed in `[alpha_j, beta_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoder {
    inputs: Vec<PreparedInput>,
}

impl Decoder {
    pub fn new(specs: &[MomentSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidArgument("at least one input is required"));
        }
        let inputs = specs
            .iter()
            .enumerate()
            .map(|(i, s)| PreparedInput::new(s).map_err(|e| e.for_input(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { inputs })
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    /// Length of the parameter vector.
    pub fn dimension(&self) -> usize {
        self.inputs.iter().map(PreparedInput::parameter_count).sum()
    }

    /// Atoms per input, `N_i + 1`.
    pub fn atoms_per_input(&self) -> Vec<usize> {
        self.inputs.iter().map(|i| i.order() + 1).collect()
    }

    /// Model evaluations per objective call, `prod_i (N_i + 1)`.
    pub fn grid_size(&self) -> usize {
        self.atoms_per_input().iter().product()
    }

    /// Search box of every coordinate.
    pub fn boxes(&self) -> Vec<(f64, f64)> {
        let mut boxes = Vec::with_capacity(self.dimension());
        for input in &self.inputs {
            input.push_boxes(&mut boxes);
        }
        boxes
    }

    pub fn decode(&self, params: &[f64]) -> Result<ProductMeasure> {
        let expected = self.dimension();
        if params.len() != expected {
            return Err(Error::ParameterCount {
                expected,
                got: params.len(),
            });
        }
        let mut offset = 0;
        let mut components = Vec::with_capacity(self.inputs.len());
        for (i, input) in self.inputs.iter().enumerate() {
            let count = input.parameter_count();
            let measure = input
                .decode(&params[offset..offset + count])
                .map_err(|e| e.for_input(i))?;
            components.push(measure);
            offset += count;
        }
        Ok(ProductMeasure::new(components))
    }
}

fn require_kind(specs: &[MomentSpec], equality: bool) -> Result<()> {
    for (input, s) in specs.iter().enumerate() {
        if s.is_equality() != equality {
            return Err(Error::ConstraintKind {
                input,
                expected: if equality { "equality" } else { "interval" },
            });
        }
    }
    Ok(())
}

/// Decodes parameters when every input carries equality constraints.
pub fn decode_equality(params: &[f64], specs: &[MomentSpec]) -> Result<ProductMeasure> {
    require_kind(specs, true)?;
    Decoder::new(specs)?.decode(params)
}

/// Decodes parameters when every input carries interval constraints.
pub fn decode_inequality(params: &[f64], specs: &[MomentSpec]) -> Result<ProductMeasure> {
    require_kind(specs, false)?;
    Decoder::new(specs)?.decode(params)
}

/// The probability-of-failure objective at one threshold.
pub struct ObjectiveSpace<'a, M: ?Sized> {
    decoder: &'a Decoder,
    model: &'a M,
    threshold: f64,
    model_evaluations: AtomicUsize,
    rejections: AtomicUsize,
}

impl<'a, M: Model + ?Sized> ObjectiveSpace<'a, M> {
    pub fn new(decoder: &'a Decoder, model: &'a M, threshold: f64) -> Result<Self> {
        if threshold.is_nan() {
            return Err(Error::InvalidArgument("threshold must not be NaN"));
        }
        if model.input_dim() != decoder.input_count() {
            return Err(Error::ModelDimension {
                expected: model.input_dim(),
                got: decoder.input_count(),
            });
        }
        Ok(Self {
            decoder,
            model,
            threshold,
            model_evaluations: AtomicUsize::new(0),
            rejections: AtomicUsize::new(0),
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Grid points requested from the model so far.
    pub fn model_evaluations(&self) -> u64 {
        self.model_evaluations.load(Ordering::Relaxed) as u64
    }

    /// Parameter vectors that failed to decode (scored with the penalty).
    pub fn rejections(&self) -> u64 {
        self.rejections.load(Ordering::Relaxed) as u64
    }
}

impl<M: Model + ?Sized> Objective for ObjectiveSpace<'_, M> {
    type Error = Error;

    fn evaluate(&self, params: &[f64]) -> Result<f64> {
        let pm = match self.decoder.decode(params) {
            Ok(pm) => pm,
            Err(Error::ParameterCount { expected, got }) => {
                return Err(Error::ParameterCount { expected, got })
            }
            Err(_) => {
                self.rejections.fetch_add(1, Ordering::Relaxed);
                return Ok(INFEASIBLE_PENALTY);
            }
        };
        self.model_evaluations
            .fetch_add(pm.grid_size(), Ordering::Relaxed);
        probability_of_failure(&pm, self.model, self.threshold)
    }
}

/// Result of one worst-case probability-of-failure optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct MinPof {
    pub value: f64,
    pub measure: ProductMeasure,
    pub point: Vec<f64>,
    pub model_evaluations: u64,
    pub objective_evaluations: usize,
    pub rejections: u64,
}

pub(crate) fn from_optimize_error(e: OptimizeError<Error>) -> Error {
    match e {
        OptimizeError::InvalidConfig(msg) => Error::InvalidArgument(msg),
        OptimizeError::Objective { source, .. } => source,
    }
}

/// Minimizes the probability of failure over the admissible class with a
/// caller-chosen executor and optional warm-start points.
pub fn min_pof_with<M: Model + ?Sized, X: Executor>(
    decoder: &Decoder,
    model: &M,
    threshold: f64,
    config: &OptimizerConfig,
    executor: &X,
    seeds: &[Vec<f64>],
) -> Result<MinPof> {
    let objective = ObjectiveSpace::new(decoder, model, threshold)?;
    let boxes = decoder.boxes();
    let best = minimize(&objective, &boxes, config, executor, seeds).map_err(from_optimize_error)?;
    if best.value >= INFEASIBLE_PENALTY {
        return Err(Error::Infeasible);
    }
    let measure = decoder.decode(&best.point)?;
    Ok(MinPof {
        value: best.value,
        measure,
        point: best.point,
        model_evaluations: objective.model_evaluations(),
        objective_evaluations: best.evaluations,
        rejections: objective.rejections(),
    })
}

/// `inf_mu P_mu(G(X) <= threshold)` estimated by global optimization.
pub fn min_pof<M: Model + ?Sized>(
    specs: &[MomentSpec],
    model: &M,
    threshold: f64,
    config: &OptimizerConfig,
) -> Result<MinPof> {
    let decoder = Decoder::new(specs)?;
    min_pof_with(&decoder, model, threshold, config, &Sequential, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{FnModel, IdentityModel};
    use alloc::vec;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn mean_spec(mean: f64) -> MomentSpec {
        MomentSpec::equality(0.0, 1.0, vec![mean]).unwrap()
    }

    #[test]
    fn decode_equality_examples() {
        let pm = decode_equality(&[0.6, 1e-9], &[mean_spec(0.5)]).unwrap();
        let m = &pm.components()[0];
        assert!(close(m.atoms(), &[0.0, 0.8], 1e-8));
        assert!(close(m.weights(), &[0.375, 0.625], 1e-8));

        let pm = decode_equality(&[0.5; 4], &[mean_spec(0.5), mean_spec(0.5)]).unwrap();
        assert_eq!(pm.components()[0], pm.components()[1]);
        let m = &pm.components()[0];
        assert!((m.atoms()[0] + m.atoms()[1] - 1.0).abs() < 1e-14);
        assert!(close(m.weights(), &[0.5, 0.5], 1e-14));

        let spec = MomentSpec::equality(0.0, 1.0, vec![0.5, 0.35]).unwrap();
        let pm = decode_equality(&[0.2, 1e-5, 0.4], &[spec]).unwrap();
        assert!(close(pm.components()[0].atoms(), &[0.08121, 0.4, 0.73878], 1e-3));
    }

    #[test]
    fn decode_inequality_examples() {
        let spec = MomentSpec::interval(0.0, 1.0, vec![0.4], vec![0.6]).unwrap();
        let a = decode_inequality(&[0.5, 0.6, 1e-9], core::slice::from_ref(&spec)).unwrap();
        let b = decode_equality(&[0.6, 1e-9], &[mean_spec(0.5)]).unwrap();
        assert_eq!(a, b);

        let spec2 = MomentSpec::interval(0.0, 1.0, vec![0.45, 0.3], vec![0.55, 0.4]).unwrap();
        let pm = decode_inequality(&[0.5, 0.35, 0.2, 1e-5, 0.4], &[spec2]).unwrap();
        assert!(close(pm.components()[0].atoms(), &[0.08121, 0.4, 0.73878], 1e-3));

        let err = decode_inequality(&[0.62, 0.5, 0.5], &[spec]).unwrap_err();
        assert!(matches!(err.root(), Error::MomentOutOfBox { order: 1, .. }));
    }

    #[test]
    fn decode_kind_and_length_checked() {
        assert!(matches!(
            decode_inequality(&[0.5, 0.5], &[mean_spec(0.5)]),
            Err(Error::ConstraintKind { .. })
        ));
        assert!(matches!(
            decode_equality(&[0.5], &[mean_spec(0.5)]),
            Err(Error::ParameterCount { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn inconsistent_interval_slice_is_infeasible() {
        // c2 < c1^2 is inside both boxes but not a moment sequence.
        let spec = MomentSpec::interval(0.0, 1.0, vec![0.4, 0.1], vec![0.6, 0.5]).unwrap();
        let decoder = Decoder::new(&[spec]).unwrap();
        let err = decoder.decode(&[0.5, 0.2, 0.5, 0.5, 0.5]).unwrap_err();
        assert!(matches!(err.root(), Error::OutsideMomentSpace { order: 2 }));
        let model = IdentityModel;
        let objective = ObjectiveSpace::new(&decoder, &model, 0.5).unwrap();
        assert_eq!(objective.evaluate(&[0.5, 0.2, 0.5, 0.5, 0.5]).unwrap(), INFEASIBLE_PENALTY);
        assert_eq!(objective.rejections(), 1);
    }

    #[test]
    fn pof_examples() {
        let m = DiscreteMeasure::new(vec![0.0, 0.8], vec![0.375, 0.625]).unwrap();
        let pm = ProductMeasure::new(vec![m]);
        assert_eq!(probability_of_failure(&pm, &IdentityModel, 0.75).unwrap(), 0.375);
        assert_eq!(probability_of_failure(&pm, &IdentityModel, f64::INFINITY).unwrap(), 1.0);
        // ties count as failure
        assert_eq!(probability_of_failure(&pm, &IdentityModel, 0.8).unwrap(), 1.0);

        let coin = DiscreteMeasure::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let pm = ProductMeasure::new(vec![coin.clone(), coin]);
        let sum = FnModel::new(2, |x: &[f64]| x[0] + x[1]);
        assert_eq!(probability_of_failure(&pm, &sum, 0.5).unwrap(), 0.25);
    }

    #[test]
    fn pof_wraps_model_failures() {
        let m = DiscreteMeasure::new(vec![0.0, 0.8], vec![0.375, 0.625]).unwrap();
        let pm = ProductMeasure::new(vec![m]);
        let nan = FnModel::new(1, |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { x[0] });
        match probability_of_failure(&pm, &nan, 0.5) {
            Err(Error::Model(e)) => assert_eq!(e.point, vec![0.8]),
            other => panic!("unexpected {other:?}"),
        }
        let wrong = FnModel::new(2, |x: &[f64]| x[0]);
        assert!(matches!(
            probability_of_failure(&pm, &wrong, 0.5),
            Err(Error::ModelDimension { .. })
        ));
    }

    #[test]
    fn grid_order_is_row_major() {
        let a = DiscreteMeasure::new(vec![1.0, 2.0], vec![0.25, 0.75]).unwrap();
        let b = DiscreteMeasure::new(vec![10.0, 20.0, 30.0], vec![0.2, 0.3, 0.5]).unwrap();
        let (points, weights) = ProductMeasure::new(vec![a, b]).grid();
        assert_eq!(&points[..6], &[1.0, 10.0, 1.0, 20.0, 1.0, 30.0]);
        assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(weights[5], 0.75 * 0.5);
    }

    #[test]
    fn min_pof_markov_cases() {
        let specs = [mean_spec(0.5)];
        let config = OptimizerConfig::default();
        let below = min_pof(&specs, &IdentityModel, 0.4, &config).unwrap();
        assert_eq!(below.value, 0.0);
        let above = min_pof(&specs, &IdentityModel, 1.0, &config).unwrap();
        assert_eq!(above.value, 1.0);
        let mid = min_pof(&specs, &IdentityModel, 0.75, &config).unwrap();
        assert!(mid.value >= 1.0 / 3.0 && mid.value <= 1.0 / 3.0 + 5e-3, "{}", mid.value);
        assert_eq!(mid.model_evaluations, 2 * mid.objective_evaluations as u64);
    }
}
