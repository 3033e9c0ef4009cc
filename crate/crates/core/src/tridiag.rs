//! Implicit QL iteration for real symmetric tridiagonal matrices.
//!
//! This is the inner solver of the Lanczos routine. Rotations are
//! accumulated only into the rows of the eigenvector matrix that the caller
//! asks for, so convergence checks that need just the last component of each
//! Ritz vector cost O(m^2) instead of O(m^3).

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("tridiagonal QL failed to converge for eigenvalue {index}")]
pub struct TridiagError {
    pub index: usize,
}

const MAX_SWEEPS: usize = 64;

/// Eigen-decomposition result with eigenvalues sorted ascending.
///
/// `rows[r][k]` is component `tracked[r]` of the eigenvector belonging to
/// `values[k]`.
#[derive(Debug, Clone)]
pub struct TridiagEigen {
    pub values: Vec<f64>,
    pub tracked: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl TridiagEigen {
    /// Full eigenvector `k` (only meaningful when every row was tracked).
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|row| row[k]).collect()
    }
}

/// Diagonalises the tridiagonal matrix with diagonal `diag` and
/// sub-diagonal `off` (`off.len() == diag.len() - 1`).
///
/// `tracked` lists which rows of the eigenvector matrix to accumulate.
pub fn tridiag_eigen(diag: &[f64], off: &[f64], tracked: &[usize]) -> Result<TridiagEigen, TridiagError> {
    let n = diag.len();
    assert!(n == 0 || off.len() + 1 == n, "sub-diagonal length must be n - 1");
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(off);
    let mut z: Vec<Vec<f64>> = tracked
        .iter()
        .map(|&r| {
            let mut row = vec![0.0; n];
            row[r] = 1.0;
            row
        })
        .collect();

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(TridiagError { index: l });
            }
            // Wilkinson-type shift from the leading 2x2 block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let rows = z.iter().map(|row| order.iter().map(|&k| row[k]).collect()).collect();
    Ok(TridiagEigen { values, tracked: tracked.to_vec(), rows })
}

/// Convenience wrapper accumulating every row.
pub fn tridiag_eigen_full(diag: &[f64], off: &[f64]) -> Result<TridiagEigen, TridiagError> {
    let all: Vec<usize> = (0..diag.len()).collect();
    tridiag_eigen(diag, off, &all)
}
