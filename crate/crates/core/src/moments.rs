//! Moment sequences and canonical moment sequences on a bounded interval.
//!
//! Moments of a probability measure on `[lower, upper]` are first mapped to
//! the unit interval with [`affine_rescale_moments`]. On `[0, 1]` the n-th
//! canonical moment is the relative position of `c_n` between the smallest
//! and largest values of the n-th moment compatible with `c_1..c_{n-1}`.
//! Both extremes are roots of Hankel determinants that are affine in `c_n`,
//! which gives the ratio form used in [`moments_to_canonical`]:
//!
//! ```text
//! p_n = (H_n / H_{n-2}) / (H_n / H_{n-2} + Hbar_n / Hbar_{n-2})
//! ```
//!
//! The inverse direction goes through the Stieltjes continued fraction
//! `sum_k c_k t^k = 1 / (1 - zeta_1 t / (1 - zeta_2 t / (1 - ...)))`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::determinant;

/// Canonical moments closer than this to 0 or 1 are treated as boundary values.
pub const INTERIOR_EPS: f64 = 1e-9;

/// Rounding slack allowed outside `[0, 1]` before a sequence is rejected.
pub const VALIDITY_SLACK: f64 = 1e-12;

/// Raw moments `c_1..c_N` mapped from `[lower, upper]` to `[0, 1]`.
///
/// The order-0 moment is implicitly 1.
pub fn affine_rescale_moments(raw: &[f64], lower: f64, upper: f64) -> Result<Vec<f64>> {
    if !lower.is_finite() || !upper.is_finite() || raw.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if lower >= upper {
        return Err(Error::InvalidBounds { lower, upper });
    }
    let width = upper - lower;
    let mut out = Vec::with_capacity(raw.len());
    for j in 1..=raw.len() {
        // sum_k C(j,k) (-lower)^(j-k) c_k, with c_0 = 1
        let mut binom = 1.0;
        let mut acc = 0.0;
        for k in 0..=j {
            let ck = if k == 0 { 1.0 } else { raw[k - 1] };
            acc += binom * libm::pow(-lower, (j - k) as f64) * ck;
            binom = binom * (j - k) as f64 / (k + 1) as f64;
        }
        out.push(acc / libm::pow(width, j as f64));
    }
    Ok(out)
}

/// A canonical moment vector `(p_1, .., p_n)` with its degeneracy index.
///
/// The degeneracy index `N` is the first order at which `p_N` is 0 or 1, i.e.
/// where the underlying moment sequence reaches the boundary of the moment
/// space. Every entry after `N` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalVector {
    values: Vec<f64>,
    degeneracy_index: Option<usize>,
}

impl CanonicalVector {
    /// Validates `values` and locates the degeneracy index (1-based).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if values.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidCanonical("entries must lie in [0, 1]"));
        }
        let degeneracy_index = values
            .iter()
            .position(|&p| p == 0.0 || p == 1.0)
            .map(|i| i + 1);
        if let Some(n) = degeneracy_index {
            if values[n..].iter().any(|&p| p != 0.0) {
                return Err(Error::InvalidCanonical(
                    "entries after a boundary value must be zero",
                ));
            }
        }
        Ok(Self {
            values,
            degeneracy_index,
        })
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

    pub fn degeneracy_index(&self) -> Option<usize> {
        self.degeneracy_index
    }

    /// True when every entry lies in `[INTERIOR_EPS, 1 - INTERIOR_EPS]`.
    pub fn is_interior(&self) -> bool {
        self.values
            .iter()
            .all(|&p| (INTERIOR_EPS..=1.0 - INTERIOR_EPS).contains(&p))
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `zeta_1 = p_1`, `zeta_k = (1 - p_{k-1}) p_k`.
pub fn zeta_sequence(p: &CanonicalVector) -> Vec<f64> {
    zetas(p.values())
}

pub(crate) fn zetas(p: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.len());
    for (k, &pk) in p.iter().enumerate() {
        out.push(if k == 0 { pk } else { (1.0 - p[k - 1]) * pk });
    }
    out
}

/// `(H_n, Hbar_n)` for a sequence `c` that includes `c_0 = 1`.
fn hankel_pair(c: &[f64], n: usize) -> (f64, f64) {
    if n == 0 {
        return (1.0, 1.0);
    }
    let m = n / 2;
    if n % 2 == 0 {
        let size = m + 1;
        let h = (0..size * size).map(|idx| c[idx / size + idx % size]).collect();
        let bsize = m;
        let hb = (0..bsize * bsize)
            .map(|idx| {
                let s = idx / bsize + idx % bsize;
                c[s + 1] - c[s + 2]
            })
            .collect();
        (determinant(h, size), determinant(hb, bsize))
    } else {
        let size = m + 1;
        let h = (0..size * size)
            .map(|idx| c[idx / size + idx % size + 1])
            .collect();
        let hb = (0..size * size)
            .map(|idx| {
                let s = idx / size + idx % size;
                c[s] - c[s + 1]
            })
            .collect();
        (determinant(h, size), determinant(hb, size))
    }
}

/// Canonical moments of a moment sequence on `[0, 1]`.
///
/// A value within [`INTERIOR_EPS`] of 0 or 1 marks the degeneracy index; the
/// measure is then fully determined, and the remaining moments must agree
/// with it.
pub fn moments_to_canonical(moments01: &[f64]) -> Result<CanonicalVector> {
    if moments01.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut c = Vec::with_capacity(moments01.len() + 1);
    c.push(1.0);
    c.extend_from_slice(moments01);

    let n_max = moments01.len();
    let mut p = vec![0.0; n_max];
    // H_{n-2}, H_{n-1} and their barred counterparts.
    let mut prev = [(1.0, 1.0), (1.0, 1.0)];
    for n in 1..=n_max {
        let (h, hb) = hankel_pair(&c, n);
        let (h2, hb2) = prev[0];
        let lower_gap = h / h2;
        let upper_gap = hb / hb2;
        let span = lower_gap + upper_gap;
        if !(span > 0.0) || !lower_gap.is_finite() || !upper_gap.is_finite() {
            return Err(Error::OutsideMomentSpace { order: n });
        }
        let pn = lower_gap / span;
        if !(-VALIDITY_SLACK..=1.0 + VALIDITY_SLACK).contains(&pn) {
            return Err(Error::OutsideMomentSpace { order: n });
        }
        if !(INTERIOR_EPS..=1.0 - INTERIOR_EPS).contains(&pn) {
            p[n - 1] = if pn < 0.5 { 0.0 } else { 1.0 };
            let canonical = CanonicalVector::new(p)?;
            check_determined_tail(&canonical, moments01, n)?;
            return Ok(canonical);
        }
        p[n - 1] = pn;
        prev = [prev[1], (h, hb)];
    }
    CanonicalVector::new(p)
}

/// Past the degeneracy index the measure is unique; its moments must match.
fn check_determined_tail(p: &CanonicalVector, moments01: &[f64], from: usize) -> Result<()> {
    let implied = canonical_to_moments(p);
    for k in from..moments01.len() {
        if libm::fabs(implied[k] - moments01[k]) > 1e-9 {
            return Err(Error::OutsideMomentSpace { order: k + 1 });
        }
    }
    Ok(())
}

/// Moments on `[0, 1]` of the measure with canonical moments `p`.
pub fn canonical_to_moments(p: &CanonicalVector) -> Vec<f64> {
    canonical_values_to_moments(p.values())
}

pub(crate) fn canonical_values_to_moments(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let z = zetas(p);
    // Truncated power series in t, coefficients 0..=n.
    let mut h = vec![0.0; n + 1];
    h[0] = 1.0;
    for k in (0..n).rev() {
        // h <- 1 / (1 - zeta_k t h)
        let mut denom = vec![0.0; n + 1];
        denom[0] = 1.0;
        for i in 0..n {
            denom[i + 1] -= z[k] * h[i];
        }
        h = series_reciprocal(&denom);
    }
    h[1..].to_vec()
}

fn series_reciprocal(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut r = vec![0.0; n];
    r[0] = 1.0 / a[0];
    for i in 1..n {
        let mut s = 0.0;
        for j in 1..=i {
            s += a[j] * r[i - j];
        }
        r[i] = -s * r[0];
    }
    r
}

/// Moment constraint for one input variable.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentConstraint {
    /// `E[x^j] = values[j-1]`.
    Equality(Vec<f64>),
    /// `lowers[j-1] <= E[x^j] <= uppers[j-1]`.
    Interval { lowers: Vec<f64>, uppers: Vec<f64> },
}

/// Support bounds and moment constraints of one input.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSpec {
    lower: f64,
    upper: f64,
    constraint: MomentConstraint,
}

impl MomentSpec {
    /// Equality constraints; the rescaled sequence must be strictly interior.
    pub fn equality(lower: f64, upper: f64, values: Vec<f64>) -> Result<Self> {
        let rescaled = affine_rescale_moments(&values, lower, upper)?;
        let p = moments_to_canonical(&rescaled)?;
        if let Some(order) = p.degeneracy_index() {
            return Err(Error::BoundaryMoments { order });
        }
        Ok(Self {
            lower,
            upper,
            constraint: MomentConstraint::Equality(values),
        })
    }

    /// Two-sided constraints. Joint feasibility of the boxes is only checked
    /// when parameter vectors are decoded.
    pub fn interval(lower: f64, upper: f64, lowers: Vec<f64>, uppers: Vec<f64>) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        if lower >= upper {
            return Err(Error::InvalidBounds { lower, upper });
        }
        if lowers.len() != uppers.len() {
            return Err(Error::InvalidArgument(
                "interval constraints need as many lower as upper bounds",
            ));
        }
        if lowers.iter().chain(&uppers).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if let Some(j) = lowers.iter().zip(&uppers).position(|(a, b)| a > b) {
            return Err(Error::InvertedMomentBox { order: j + 1 });
        }
        Ok(Self {
            lower,
            upper,
            constraint: MomentConstraint::Interval { lowers, uppers },
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn constraint(&self) -> &MomentConstraint {
        &self.constraint
    }

    /// Number of constrained moments `N`.
    pub fn order(&self) -> usize {
        match &self.constraint {
            MomentConstraint::Equality(v) => v.len(),
            MomentConstraint::Interval { lowers, .. } => lowers.len(),
        }
    }

    pub fn is_equality(&self) -> bool {
        matches!(self.constraint, MomentConstraint::Equality(_))
    }

    /// Optimizer coordinates for this input: `N + 1` free canonical moments,
    /// plus `N` moment coordinates in interval mode.
    pub fn parameter_count(&self) -> usize {
        match self.constraint {
            MomentConstraint::Equality(_) => self.order() + 1,
            MomentConstraint::Interval { .. } => 2 * self.order() + 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn rescale_uniform_on_0_2() {
        let c = affine_rescale_moments(&[1.0, 4.0 / 3.0], 0.0, 2.0).unwrap();
        assert!(close(&c, &[0.5, 1.0 / 3.0], 1e-15));
    }

    #[test]
    fn rescale_identity() {
        let c = affine_rescale_moments(&[0.5, 0.35], 0.0, 1.0).unwrap();
        assert!(close(&c, &[0.5, 0.35], 0.0));
    }

    #[test]
    fn rescale_rejects_nan() {
        assert_eq!(
            affine_rescale_moments(&[f64::NAN], 0.0, 1.0),
            Err(Error::NonFiniteInput)
        );
    }

    #[test]
    fn canonical_worked_example() {
        let p = moments_to_canonical(&[0.5, 0.35]).unwrap();
        assert!(close(p.values(), &[0.5, 0.4], 1e-14));
        assert_eq!(p.degeneracy_index(), None);
    }

    #[test]
    fn canonical_single() {
        let p = moments_to_canonical(&[0.3]).unwrap();
        assert!(close(p.values(), &[0.3], 0.0));
    }

    #[test]
    fn canonical_reports_first_bad_order() {
        // c2 < c1^2
        assert_eq!(
            moments_to_canonical(&[0.5, 0.2, 0.1]),
            Err(Error::OutsideMomentSpace { order: 2 })
        );
        assert_eq!(
            moments_to_canonical(&[1.2]),
            Err(Error::OutsideMomentSpace { order: 1 })
        );
    }

    #[test]
    fn dirac_interior_and_endpoint() {
        let p = moments_to_canonical(&[0.5, 0.25, 0.125]).unwrap();
        assert_eq!(p.degeneracy_index(), Some(2));
        assert_eq!(p.values(), &[0.5, 0.0, 0.0]);

        let p = moments_to_canonical(&[1.0, 1.0]).unwrap();
        assert_eq!(p.degeneracy_index(), Some(1));
        assert_eq!(p.values(), &[1.0, 0.0]);

        let p = moments_to_canonical(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.degeneracy_index(), Some(1));
        assert_eq!(p.values()[0], 0.0);
    }

    #[test]
    fn determined_tail_must_match() {
        // Dirac at 0.5 but a third moment that disagrees.
        assert_eq!(
            moments_to_canonical(&[0.5, 0.25, 0.2]),
            Err(Error::OutsideMomentSpace { order: 3 })
        );
    }

    #[test]
    fn inverse_examples() {
        let p = CanonicalVector::new(vec![0.5, 0.4]).unwrap();
        assert!(close(&canonical_to_moments(&p), &[0.5, 0.35], 1e-15));
        let p = CanonicalVector::new(vec![1.0]).unwrap();
        assert_eq!(p.degeneracy_index(), Some(1));
        assert!(close(&canonical_to_moments(&p), &[1.0], 0.0));
    }

    #[test]
    fn canonical_vector_gamma_rule() {
        assert!(CanonicalVector::new(vec![0.3, 1.0, 0.2]).is_err());
        assert!(CanonicalVector::new(vec![0.3, 1.2]).is_err());
        let v = CanonicalVector::new(vec![0.3, 1.0, 0.0]).unwrap();
        assert_eq!(v.degeneracy_index(), Some(2));
    }

    #[test]
    fn zeta_examples() {
        let z = zeta_sequence(&CanonicalVector::new(vec![0.5, 0.4, 0.2]).unwrap());
        assert!(close(&z, &[0.5, 0.2, 0.12], 1e-15));
        let z = zeta_sequence(&CanonicalVector::new(vec![1.0]).unwrap());
        assert_eq!(z, vec![1.0]);
        let z = zeta_sequence(&CanonicalVector::new(vec![0.5; 4]).unwrap());
        assert_eq!(z, vec![0.5, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn spec_constructors() {
        assert!(MomentSpec::equality(0.0, 1.0, vec![0.5, 0.35]).is_ok());
        assert_eq!(
            MomentSpec::equality(0.0, 1.0, vec![0.5, 0.2]).unwrap_err(),
            Error::OutsideMomentSpace { order: 2 }
        );
        assert_eq!(
            MomentSpec::equality(0.0, 1.0, vec![0.5, 0.25]).unwrap_err(),
            Error::BoundaryMoments { order: 2 }
        );
        assert!(matches!(
            MomentSpec::equality(1.0, 1.0, vec![1.0]),
            Err(Error::InvalidBounds { .. })
        ));
        assert_eq!(
            MomentSpec::interval(0.0, 1.0, vec![0.4, 0.4], vec![0.6, 0.3]).unwrap_err(),
            Error::InvertedMomentBox { order: 2 }
        );
        let s = MomentSpec::interval(0.0, 1.0, vec![0.4], vec![0.6]).unwrap();
        assert_eq!(s.parameter_count(), 3);
        assert_eq!(MomentSpec::equality(0.0, 1.0, vec![0.5]).unwrap().parameter_count(), 2);
    }
}
