//! Built-in analytic models.

use alloc::vec::Vec;

use crate::engine::Model;
use crate::error::{Error, ModelError, Result};

/// Inputs of the river flood model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydraulicInput {
    /// Annual maximum flow rate (m^3/s).
    pub q: f64,
    /// Manning-Strickler coefficient.
    pub ks: f64,
    /// Downstream river depth (m).
    pub zv: f64,
    /// Upstream river depth (m).
    pub zm: f64,
}

/// Water height `H = (Q / (300 Ks sqrt((Zm - Zv) / 5000)))^(3/5)`.
pub fn hydraulic_height(input: HydraulicInput) -> Result<f64> {
    let HydraulicInput { q, ks, zv, zm } = input;
    if ![q, ks, zv, zm].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if zm <= zv {
        return Err(Error::InvalidArgument("upstream depth must exceed downstream depth"));
    }
    if ks <= 0.0 {
        return Err(Error::InvalidArgument("Strickler coefficient must be positive"));
    }
    if q < 0.0 {
        return Err(Error::InvalidArgument("flow rate must be non-negative"));
    }
    let slope = libm::sqrt((zm - zv) / 5000.0);
    Ok(libm::pow(q / (300.0 * ks * slope), 0.6))
}

/// The flood model over `(Q, Ks, Zv, Zm)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HydraulicModel;

impl Model for HydraulicModel {
    fn input_dim(&self) -> usize {
        4
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        let input = HydraulicInput {
            q: x[0],
            ks: x[1],
            zv: x[2],
            zm: x[3],
        };
        hydraulic_height(input).map_err(|e| ModelError::new(x, alloc::format!("{e}")))
    }
}

/// `G(x) = x[0]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityModel;

impl Model for IdentityModel {
    fn input_dim(&self) -> usize {
        1
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        Ok(x[0])
    }
}

/// `G(x) = sum_i scale_i * x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    scales: Vec<f64>,
}

impl LinearModel {
    pub fn new(scales: Vec<f64>) -> Self {
        Self { scales }
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
}

impl Model for LinearModel {
    fn input_dim(&self) -> usize {
        self.scales.len()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        Ok(x.iter().zip(&self.scales).map(|(a, b)| a * b).sum())
    }
}

/// Adapts a plain function into a [`Model`].
pub struct FnModel<F> {
    dim: usize,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Model for FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        Ok((self.f)(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NOMINAL: HydraulicInput = HydraulicInput {
        q: 1013.0,
        ks: 30.0,
        zv: 50.0,
        zm: 54.5,
    };

    #[test]
    fn hydraulic_nominal() {
        // sqrt(4.5 / 5000) = 0.03, 1013 / 270 = 3.75185..
        let expected = libm::pow(1013.0 / 270.0, 0.6);
        let h = hydraulic_height(NOMINAL).unwrap();
        assert!((h - expected).abs() < 1e-12);
        assert!((h - 2.2109).abs() < 2e-4);
    }

    #[test]
    fn hydraulic_zero_flow_and_scaling() {
        assert_eq!(hydraulic_height(HydraulicInput { q: 0.0, ..NOMINAL }).unwrap(), 0.0);
        let h1 = hydraulic_height(NOMINAL).unwrap();
        let h4 = hydraulic_height(HydraulicInput { q: 4.0 * NOMINAL.q, ..NOMINAL }).unwrap();
        assert!((h4 / h1 - libm::pow(4.0, 0.6)).abs() < 1e-12);
        assert!((h4 / h1 - 2.2974).abs() < 1e-4);
    }

    #[test]
    fn hydraulic_domain_errors() {
        assert!(hydraulic_height(HydraulicInput { zm: 50.0, ..NOMINAL }).is_err());
        assert!(hydraulic_height(HydraulicInput { ks: 0.0, ..NOMINAL }).is_err());
        assert!(HydraulicModel.evaluate(&[1.0, 30.0, 55.0, 54.0]).is_err());
    }

    #[test]
    fn identity_and_linear() {
        for v in [0.3, 1.0, -2.5] {
            assert_eq!(IdentityModel.evaluate(&[v]).unwrap(), v);
        }
        let m = LinearModel::new(alloc::vec![1.0, 2.0]);
        assert_eq!(m.evaluate(&[1.0, 0.5]).unwrap(), 2.0);
    }
}
