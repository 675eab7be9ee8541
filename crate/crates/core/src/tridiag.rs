//! Closed-form inverses of tridiagonal matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Inverse of the tridiagonal matrix with diagonal `a`, super-diagonal `b`
/// and sub-diagonal `c`, from the leading and trailing principal minors
/// `theta` and `phi`.
pub fn tridiagonal_inverse(a: &[f64], b: &[f64], c: &[f64]) -> Result<DMatrix<f64>> {
    let m = a.len();
    if m == 0 || b.len() + 1 != m || c.len() + 1 != m {
        return Err(Error::param("tridiagonal bands have inconsistent lengths"));
    }
    // theta[i] = det of leading i×i block, theta[0] = 1
    let mut theta = vec![0.0; m + 1];
    theta[0] = 1.0;
    theta[1] = a[0];
    for i in 2..=m {
        theta[i] = a[i - 1] * theta[i - 1] - b[i - 2] * c[i - 2] * theta[i - 2];
    }
    // phi[i] = det of trailing block starting at row i (1-based), phi[m+1] = 1
    let mut phi = vec![0.0; m + 2];
    phi[m + 1] = 1.0;
    phi[m] = a[m - 1];
    for i in (1..m).rev() {
        phi[i] = a[i - 1] * phi[i + 1] - b[i - 1] * c[i - 1] * phi[i + 2];
    }
    let det = theta[m];
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Degenerate {
            detail: format!("tridiagonal matrix is singular (determinant {det:e})"),
            pairs: Vec::new(),
        });
    }
    let mut inv = DMatrix::zeros(m, m);
    for i in 1..=m {
        for j in 1..=m {
            let v = if i == j {
                theta[i - 1] * phi[j + 1] / det
            } else if i < j {
                let prod: f64 = b[i - 1..j - 1].iter().product();
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                sign * prod * theta[i - 1] * phi[j + 1] / det
            } else {
                let prod: f64 = c[j - 1..i - 1].iter().product();
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                sign * prod * theta[j - 1] * phi[i + 1] / det
            };
            inv[(i - 1, j - 1)] = v;
        }
    }
    Ok(inv)
}

/// Leading principal minor `theta_i = (sigma_c/2)^i (i + 1)` of the `m×m`
/// matrix with diagonal `sigma_c` and off-diagonals `-sigma_c/2`.
pub fn constant_theta(i: usize, sigma_c: f64) -> f64 {
    (0.5 * sigma_c).powi(i as i32) * (i + 1) as f64
}

/// Inverse of the constant tridiagonal matrix above:
/// `alpha_ij = (2/sigma_c) min(i,j) (m + 1 - max(i,j)) / (m + 1)`.
pub fn constant_inverse(m: usize, sigma_c: f64) -> DMatrix<f64> {
    let mp1 = (m + 1) as f64;
    DMatrix::from_fn(m, m, |i, j| {
        let (lo, hi) = ((i.min(j) + 1) as f64, (i.max(j) + 1) as f64);
        2.0 / sigma_c * lo * (mp1 - hi) / mp1
    })
}
