//! Small dense kernels: determinants, tridiagonal eigenvalues and the
//! Vandermonde moment system.

use alloc::vec::Vec;

/// Determinant of a row-major `n x n` matrix by LU with partial pivoting.
///
/// The empty matrix has determinant 1.
pub fn determinant(mut a: Vec<f64>, n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if libm::fabs(a[row * n + col]) > libm::fabs(a[pivot * n + col]) {
                pivot = row;
            }
        }
        let p = a[pivot * n + col];
        if p == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..n {
            let factor = a[row * n + col] / p;
            if factor != 0.0 {
                for k in col + 1..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
            }
        }
    }
    det
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below `x`.
fn sturm_count(diag: &[f64], off_sq: &[f64], x: f64, tiny: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 { d - x } else { d - x - off_sq[i - 1] / q };
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues of a symmetric tridiagonal matrix, ascending.
///
/// `off` holds the `n - 1` sub-diagonal entries. Each eigenvalue is isolated
/// by Sturm-sequence bisection inside the Gershgorin interval, which gives
/// absolute accuracy on the order of machine epsilon times the matrix norm.
pub fn symmetric_tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    debug_assert_eq!(off.len(), n.saturating_sub(1));
    if n == 0 {
        return Vec::new();
    }
    let off_sq: Vec<f64> = off.iter().map(|e| e * e).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { libm::fabs(off[i - 1]) } else { 0.0 };
        let right = if i + 1 < n { libm::fabs(off[i]) } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    let norm = libm::fabs(lo).max(libm::fabs(hi)).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * norm;
    let margin = 2.0 * tiny;
    lo -= margin;
    hi += margin;

    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        // k-th eigenvalue: smallest x with count(x) > k.
        let mut a = lo;
        let mut b = hi;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sturm_count(diag, &off_sq, mid, tiny) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        values.push(0.5 * (a + b));
    }
    values
}

/// Solves `sum_k w_k x_k^j = b_j` for `j = 0..n` (the transposed Vandermonde
/// system) with the Bjorck-Pereyra divided-difference elimination.
///
/// Returns `None` when two nodes coincide.
pub fn solve_vandermonde_moments(nodes: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let len = nodes.len();
    debug_assert_eq!(rhs.len(), len);
    for i in 0..len {
        for j in i + 1..len {
            if nodes[i] == nodes[j] {
                return None;
            }
        }
    }
    if len == 0 {
        return Some(Vec::new());
    }
    let n = len - 1;
    let mut f = rhs.to_vec();
    for k in 0..n {
        for i in (k + 1..=n).rev() {
            f[i] -= nodes[k] * f[i - 1];
        }
    }
    for k in (0..n).rev() {
        for i in k + 1..=n {
            f[i] /= nodes[i] - nodes[i - k - 1];
        }
        for i in k..n {
            f[i] -= f[i + 1];
        }
    }
    Some(f)
}
