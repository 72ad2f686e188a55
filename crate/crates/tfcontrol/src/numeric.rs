//! Small shared numerical helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Solve a real symmetric tridiagonal system with complex right-hand side by
/// the Thomas algorithm. `diag` has length n, `off` length n-1 (sub = super).
pub fn solve_tridiag(diag: &[f64], off: &[f64], rhs: &[Complex64]) -> Vec<Complex64> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n);
    assert_eq!(rhs.len(), n);
    let mut c = vec![0.0; n];
    let mut d = vec![Complex64::default(); n];
    c[0] = off.first().copied().unwrap_or(0.0) / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - off[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - d[i - 1] * off[i - 1]) / denom;
    }
    let mut x = vec![Complex64::default(); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - x[i + 1] * c[i];
    }
    x
}

/// `y = A x` for a real matrix and complex vector, splitting into real and
/// imaginary parts.
pub fn real_mat_complex_vec(a: &DMatrix<f64>, x: &[Complex64]) -> Vec<Complex64> {
    let re = DVector::from_iterator(x.len(), x.iter().map(|z| z.re));
    let im = DVector::from_iterator(x.len(), x.iter().map(|z| z.im));
    let yre = a * re;
    let yim = a * im;
    yre.iter()
        .zip(yim.iter())
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect()
}

/// sin(x)/x with a series fallback near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_dense_solve() {
        let n = 7;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| -0.7 + 0.05 * i as f64).collect();
        let rhs: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(i as f64, 1.0 - i as f64 * 0.3))
            .collect();
        let x = solve_tridiag(&diag, &off, &rhs);
        // residual check
        for i in 0..n {
            let mut r = diag[i] * x[i];
            if i > 0 {
                r += off[i - 1] * x[i - 1];
            }
            if i < n - 1 {
                r += off[i] * x[i + 1];
            }
            assert!((r - rhs[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn sinc_near_zero() {
        assert!((sinc(0.0) - 1.0).abs() < 1e-15);
        assert!((sinc(1e-6) - 1.0).abs() < 1e-12);
        assert!((sinc(1.0) - 1.0_f64.sin()).abs() < 1e-15);
    }
}
