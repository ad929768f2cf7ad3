//! Discrete measures generated from canonical moment vectors.
//!
//! The support of the measure with canonical moments `p_1..p_{2n-1}` is the
//! zero set of the monic star polynomial `P*_n`, built by a three-term
//! recursion in the `zeta` sequence. The same recursion is the characteristic
//! recurrence of a symmetric tridiagonal (Jacobi) matrix, whose eigenvalues
//! are computed instead of polynomial roots. Weights come from the
//! Vandermonde moment system.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{solve_vandermonde_moments, symmetric_tridiagonal_eigenvalues};
use crate::moments::{moments_to_canonical, zetas, INTERIOR_EPS};

/// Weights below this are an error rather than rounding noise.
pub const NEGATIVE_WEIGHT_TOLERANCE: f64 = 1e-6;

/// Relative span under which two atoms are considered one cluster.
pub const CLUSTER_TOLERANCE: f64 = 1e-12;

/// Clamp retries (each multiplies the clamp margin by 10) before giving up.
pub const CLAMP_RETRIES: usize = 3;

/// A finite convex combination of Dirac masses.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Atoms must be strictly increasing and finite; weights must lie in
    /// `[0, 1]` and sum to one within `1e-10`.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() || atoms.is_empty() {
            return Err(Error::InvalidMeasure(
                "atoms and weights must be non-empty and of equal length",
            ));
        }
        if atoms.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMeasure("atoms must be strictly increasing"));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidMeasure("weights must lie in [0, 1]"));
        }
        let total: f64 = weights.iter().sum();
        if libm::fabs(total - 1.0) > 1e-10 {
            return Err(Error::InvalidMeasure("weights must sum to one"));
        }
        Ok(Self { atoms, weights })
    }

    pub fn dirac(at: f64) -> Self {
        Self {
            atoms: alloc::vec![at],
            weights: alloc::vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Raw moment `E[x^order]`.
    pub fn moment(&self, order: usize) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * libm::pow(*x, order as f64))
            .sum()
    }

    /// Raw moments of orders `1..=count`.
    pub fn moments(&self, count: usize) -> Vec<f64> {
        (1..=count).map(|j| self.moment(j)).collect()
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .filter(|(a, _)| **a <= x)
            .map(|(_, w)| w)
            .sum()
    }
}

/// Monic polynomial, coefficients stored from the constant term upward.
#[derive(Debug, Clone, PartialEq)]
pub struct StarPolynomial {
    coefficients: Vec<f64>,
}

impl StarPolynomial {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

fn zeta_at(zeta: &[f64], k: usize) -> f64 {
    // 1-based with zeta_0 = 0
    if k == 0 {
        0.0
    } else {
        zeta[k - 1]
    }
}

/// `P*_{k+1} = (x - a - (b-a)(zeta_{2k} + zeta_{2k+1})) P*_k - (b-a)^2 zeta_{2k-1} zeta_{2k} P*_{k-1}`
/// with `P*_{-1} = 0`, `P*_0 = 1`.
pub fn star_polynomial(zeta: &[f64], lower: f64, upper: f64, degree: usize) -> Result<StarPolynomial> {
    if lower >= upper {
        return Err(Error::InvalidBounds { lower, upper });
    }
    let needed = (2 * degree).saturating_sub(1);
    if zeta.len() < needed {
        return Err(Error::InsufficientZetas {
            degree,
            needed,
            got: zeta.len(),
        });
    }
    let width = upper - lower;
    let mut prev: Vec<f64> = Vec::new();
    let mut cur: Vec<f64> = alloc::vec![1.0];
    for k in 0..degree {
        let shift = lower + width * (zeta_at(zeta, 2 * k) + zeta_at(zeta, 2 * k + 1));
        let coupling = if k == 0 {
            0.0
        } else {
            width * width * zeta_at(zeta, 2 * k - 1) * zeta_at(zeta, 2 * k)
        };
        let mut next = alloc::vec![0.0; cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= shift * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= coupling * c;
        }
        prev = cur;
        cur = next;
    }
    Ok(StarPolynomial { coefficients: cur })
}

/// Diagonal and off-diagonal of the Jacobi matrix of `P*_n` on `[lower, upper]`.
pub fn jacobi_matrix(zeta: &[f64], lower: f64, upper: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let width = upper - lower;
    let diag = (0..n)
        .map(|k| lower + width * (zeta_at(zeta, 2 * k) + zeta_at(zeta, 2 * k + 1)))
        .collect();
    let off = (1..n)
        .map(|k| width * libm::sqrt((zeta_at(zeta, 2 * k - 1) * zeta_at(zeta, 2 * k)).max(0.0)))
        .collect();
    (diag, off)
}

/// Roots of `P*_{n_atoms}` as eigenvalues of the Jacobi matrix, ascending.
pub fn support_from_canonical(
    p_full: &[f64],
    lower: f64,
    upper: f64,
    n_atoms: usize,
) -> Result<Vec<f64>> {
    if lower >= upper {
        return Err(Error::InvalidBounds { lower, upper });
    }
    if n_atoms == 0 {
        return Err(Error::InvalidArgument("at least one atom is required"));
    }
    let needed = 2 * n_atoms - 1;
    if p_full.len() < needed {
        return Err(Error::InsufficientZetas {
            degree: n_atoms,
            needed,
            got: p_full.len(),
        });
    }
    if p_full.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let zeta = zetas(&p_full[..needed]);
    let (diag, off) = jacobi_matrix(&zeta, lower, upper, n_atoms);
    let mut roots = symmetric_tridiagonal_eigenvalues(&diag, &off);
    for r in roots.iter_mut() {
        *r = r.clamp(lower, upper);
    }
    let gap = CLUSTER_TOLERANCE * (upper - lower);
    if roots.windows(2).any(|w| w[1] - w[0] <= gap) {
        return Err(Error::DegenerateCluster);
    }
    Ok(roots)
}

/// Weights reproducing mass one and the moments `moments_prefix` (orders
/// `1..n_atoms-1`) on the given atoms.
pub fn weights_from_support(atoms: &[f64], moments_prefix: &[f64]) -> Result<Vec<f64>> {
    if atoms.is_empty() {
        return Err(Error::InvalidArgument("at least one atom is required"));
    }
    if moments_prefix.len() + 1 != atoms.len() {
        return Err(Error::InvalidArgument(
            "need exactly one moment fewer than the number of atoms",
        ));
    }
    if atoms.iter().chain(moments_prefix).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut rhs = Vec::with_capacity(atoms.len());
    rhs.push(1.0);
    rhs.extend_from_slice(moments_prefix);
    let raw = solve_vandermonde_moments(atoms, &rhs).ok_or(Error::SingularSystem)?;
    if raw.iter().any(|w| !w.is_finite()) {
        return Err(Error::SingularSystem);
    }
    if let Some((index, &value)) = raw
        .iter()
        .enumerate()
        .find(|(_, w)| **w < -NEGATIVE_WEIGHT_TOLERANCE)
    {
        return Err(Error::NegativeWeight { index, value });
    }
    let mut weights: Vec<f64> = raw.iter().map(|w| w.clamp(0.0, 1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(weights)
}

/// The measure with moments `fixed_moments01` (on `[0, 1]`) and free
/// canonical moments `free_canonical` (`p_{N+1}..p_{2N+1}`), mapped to
/// `[lower, upper]`.
///
/// Free coordinates are clamped to `[eps, 1 - eps]`, starting from
/// `eps = 1e-9`; a collapsed atom cluster retries with `eps * 10` up to
/// [`CLAMP_RETRIES`] times.
pub fn measure_from_canonical(
    fixed_moments01: &[f64],
    free_canonical: &[f64],
    lower: f64,
    upper: f64,
) -> Result<DiscreteMeasure> {
    let fixed = moments_to_canonical(fixed_moments01)?;
    if let Some(order) = fixed.degeneracy_index() {
        return Err(Error::BoundaryMoments { order });
    }
    measure_from_canonical_prefix(fixed.values(), fixed_moments01, free_canonical, lower, upper)
}

/// Same as [`measure_from_canonical`] with the fixed canonical prefix
/// already computed.
pub(crate) fn measure_from_canonical_prefix(
    fixed_canonical: &[f64],
    fixed_moments01: &[f64],
    free_canonical: &[f64],
    lower: f64,
    upper: f64,
) -> Result<DiscreteMeasure> {
    let n = fixed_canonical.len();
    if free_canonical.len() != n + 1 {
        return Err(Error::ParameterCount {
            expected: n + 1,
            got: free_canonical.len(),
        });
    }
    if lower >= upper {
        return Err(Error::InvalidBounds { lower, upper });
    }
    if free_canonical.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut p = Vec::with_capacity(2 * n + 1);
    let mut eps = INTERIOR_EPS;
    let mut attempt = 0;
    let atoms01 = loop {
        p.clear();
        p.extend_from_slice(fixed_canonical);
        p.extend(free_canonical.iter().map(|v| v.clamp(eps, 1.0 - eps)));
        match support_from_canonical(&p, 0.0, 1.0, n + 1) {
            Ok(atoms) => break atoms,
            Err(Error::DegenerateCluster) if attempt < CLAMP_RETRIES => {
                attempt += 1;
                eps *= 10.0;
            }
            Err(e) => return Err(e),
        }
    };
    let weights = weights_from_support(&atoms01, fixed_moments01)?;
    let width = upper - lower;
    let atoms = atoms01
        .iter()
        .map(|x| (lower + width * x).clamp(lower, upper))
        .collect::<Vec<_>>();
    if atoms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DegenerateCluster);
    }
    Ok(DiscreteMeasure { atoms, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn star_polynomial_examples() {
        let p = star_polynomial(&[0.5, 0.2, 0.12], 0.0, 1.0, 2).unwrap();
        assert!(close(p.coefficients(), &[0.06, -0.82, 1.0], 1e-15));
        let p = star_polynomial(&[0.5], 0.0, 1.0, 1).unwrap();
        assert!(close(p.coefficients(), &[-0.5, 1.0], 0.0));
        let p = star_polynomial(&[0.5, 0.25, 0.25], 0.0, 1.0, 2).unwrap();
        assert!(close(p.coefficients(), &[0.125, -1.0, 1.0], 1e-15));
    }

    #[test]
    fn star_polynomial_needs_enough_zetas() {
        assert_eq!(
            star_polynomial(&[0.5, 0.2], 0.0, 1.0, 2),
            Err(Error::InsufficientZetas {
                degree: 2,
                needed: 3,
                got: 2
            })
        );
    }

    #[test]
    fn support_examples() {
        let r = support_from_canonical(&[0.5, 0.4, 0.2], 0.0, 1.0, 2).unwrap();
        assert!(close(&r, &[0.08121, 0.73878], 1e-4));
        let r = support_from_canonical(&[0.5, 0.4, 0.2, 1e-5, 0.4], 0.0, 1.0, 3).unwrap();
        assert!(close(&r, &[0.08121, 0.4, 0.73878], 1e-3));
        let r = support_from_canonical(&[0.5, 0.5, 0.5], 0.0, 1.0, 2).unwrap();
        let s = libm::sqrt(0.125);
        assert!(close(&r, &[0.5 - s, 0.5 + s], 1e-14));
    }

    #[test]
    fn support_cluster_detected() {
        // p2 = 0 decouples the blocks and both reduce to the value 0.5.
        let err = support_from_canonical(&[0.5, 0.0, 0.5], 0.0, 1.0, 2).unwrap_err();
        assert_eq!(err, Error::DegenerateCluster);
    }

    #[test]
    fn weights_examples() {
        let w = weights_from_support(&[0.08121, 0.73878], &[0.5]).unwrap();
        assert!(close(&w, &[0.36312, 0.63688], 2e-4));
        let w = weights_from_support(&[0.0, 1.0], &[0.3]).unwrap();
        assert!(close(&w, &[0.7, 0.3], 1e-15));
    }

    #[test]
    fn weights_rounded_atoms_flagged_negative() {
        // Five-digit atoms of the three-point example put the middle weight
        // at about -1.2e-5, below the rounding tolerance.
        let err = weights_from_support(&[0.08121, 0.4, 0.73878], &[0.5, 0.35]).unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { index: 1, .. }));
    }

    #[test]
    fn weights_errors() {
        assert_eq!(
            weights_from_support(&[0.3, 0.3], &[0.3]),
            Err(Error::SingularSystem)
        );
        assert!(matches!(
            weights_from_support(&[0.6, 0.9], &[0.3]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
    }

    #[test]
    fn measure_examples() {
        let m = measure_from_canonical(&[0.5, 0.35], &[0.2, 1e-5, 0.4], 0.0, 1.0).unwrap();
        assert!(close(m.atoms(), &[0.08121, 0.4, 0.73878], 1e-3));
        assert!(close(m.weights(), &[0.363, 0.0, 0.637], 1e-3));
        assert!(m.weights()[1] > 0.0 && m.weights()[1] <= 1e-4);

        let m = measure_from_canonical(&[0.5], &[0.6, 1e-9], 0.0, 1.0).unwrap();
        assert!(close(m.atoms(), &[0.0, 0.8], 1e-8));
        assert!(close(m.weights(), &[0.375, 0.625], 1e-8));

        let m = measure_from_canonical(&[], &[0.25], 2.0, 6.0).unwrap();
        assert!(close(m.atoms(), &[3.0], 1e-12));
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn measure_rejects_wrong_free_count() {
        assert_eq!(
            measure_from_canonical(&[0.5], &[0.5], 0.0, 1.0),
            Err(Error::ParameterCount { expected: 2, got: 1 })
        );
    }

    #[test]
    fn discrete_measure_invariants() {
        assert!(DiscreteMeasure::new(vec![0.2, 0.1], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![0.1, 0.2], vec![0.5, 0.6]).is_err());
        let m = DiscreteMeasure::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(m.moment(1), 0.5);
        assert_eq!(m.cdf(0.0), 0.5);
    }
}
