//! Dense complex Hermitian matrices.

use std::ops::{Add, Mul, Sub};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{c64, Mat, MatRef, Par};
use thiserror::Error;

/// Absolute tolerance on `|M_ij - conj(M_ji)|` accepted at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian: max |M - M^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty matrix")]
    Empty,
    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),
}

/// A square complex matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    mat: Mat<c64>,
}

/// Largest entrywise deviation `|M_ij - conj(M_ji)|`.
pub fn hermitian_deviation(mat: MatRef<'_, c64>) -> f64 {
    let n = mat.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            let dev = (mat[(i, j)] - mat[(j, i)].conj()).norm();
            worst = worst.max(dev);
        }
    }
    worst
}

fn check_shape(mat: MatRef<'_, c64>) -> Result<(), MatrixError> {
    if mat.nrows() != mat.ncols() {
        return Err(MatrixError::NotSquare { rows: mat.nrows(), cols: mat.ncols() });
    }
    if mat.nrows() == 0 {
        return Err(MatrixError::Empty);
    }
    for j in 0..mat.ncols() {
        for i in 0..mat.nrows() {
            let z = mat[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(MatrixError::NonFinite);
            }
        }
    }
    Ok(())
}

impl HermitianMatrix {
    /// Validates `mat` and wraps it.
    pub fn new(mat: Mat<c64>) -> Result<Self, MatrixError> {
        check_shape(mat.as_ref())?;
        let deviation = hermitian_deviation(mat.as_ref());
        if deviation > HERMITIAN_TOL {
            return Err(MatrixError::NotHermitian { deviation });
        }
        Ok(Self { mat })
    }

    /// Projects a square matrix onto its Hermitian part `(M + M^dagger) / 2`.
    ///
    /// Used after products like `U D U^dagger` whose rounding leaves the
    /// result Hermitian only to machine precision.
    pub fn hermitize(mat: Mat<c64>) -> Result<Self, MatrixError> {
        check_shape(mat.as_ref())?;
        let n = mat.nrows();
        let sym = Mat::from_fn(n, n, |i, j| (mat[(i, j)] + mat[(j, i)].conj()) * 0.5);
        Ok(Self { mat: sym })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { mat: Mat::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        Self::from_real_diagonal(&vec![value; dim])
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            mat: Mat::from_fn(n, n, |i, j| if i == j { c64::new(diag[i], 0.0) } else { c64::new(0.0, 0.0) }),
        }
    }

    /// Builds from row-major entries.
    pub fn from_row_major(dim: usize, entries: &[c64]) -> Result<Self, MatrixError> {
        if entries.len() != dim * dim {
            return Err(MatrixError::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Self::new(Mat::from_fn(dim, dim, |i, j| entries[i * dim + j]))
    }

    pub fn to_row_major(&self) -> Vec<c64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.mat[(i, j)]);
            }
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    pub fn as_mat(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm_l2()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, MatrixError> {
        Ok(self.eigen(false)?.0)
    }

    /// Ascending eigenvalues and, if requested, matching eigenvectors as
    /// columns. Runs single-threaded so results do not depend on the
    /// surrounding thread pool.
    pub fn eigen(&self, want_vectors: bool) -> Result<(Vec<f64>, Option<Mat<c64>>), MatrixError> {
        let n = self.dim();
        let par = Par::Seq;
        let compute = if want_vectors { ComputeEigenvectors::Yes } else { ComputeEigenvectors::No };
        let mut s = Diag::<c64>::zeros(n);
        let mut u = want_vectors.then(|| Mat::<c64>::zeros(n, n));
        let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<c64>(n, compute, par, Default::default()));
        evd::self_adjoint_evd(
            self.mat.as_ref(),
            s.as_mut(),
            u.as_mut().map(|u| u.as_mut()),
            par,
            MemStack::new(&mut buf),
            Default::default(),
        )
        .map_err(|e| MatrixError::Decomposition(format!("{e:?}")))?;
        let s = s.column_vector();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
        let vals = order.iter().map(|&k| s[k].re).collect();
        let vecs = u.map(|u| Mat::from_fn(n, n, |i, j| u[(i, order[j])]));
        Ok((vals, vecs))
    }

    /// Spectral norm, i.e. the largest |eigenvalue|.
    pub fn operator_norm(&self) -> Result<f64, MatrixError> {
        let vals = self.eigenvalues()?;
        Ok(vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { mat: Mat::from_fn(self.dim(), self.dim(), |i, j| self.mat[(i, j)] * factor) }
    }

    pub fn plus_identity(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.mat[(i, i)] += c64::new(shift, 0.0);
        }
        out
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &HermitianMatrix) -> HermitianMatrix {
        let (a, b) = (self.dim(), other.dim());
        Self {
            mat: Mat::from_fn(a * b, a * b, |i, j| {
                self.mat[(i / b, j / b)] * other.mat[(i % b, j % b)]
            }),
        }
    }

    /// `U M U^dagger` for a square `U` of matching size.
    pub fn conjugated_by(&self, unitary: MatRef<'_, c64>) -> Result<HermitianMatrix, MatrixError> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(MatrixError::DimensionMismatch { expected: self.dim(), found: unitary.nrows() });
        }
        let prod = unitary * self.mat.as_ref() * unitary.adjoint();
        Self::hermitize(prod)
    }

    /// Exchanges the two tensor factors of a `d^2 x d^2` two-site operator,
    /// i.e. returns `SWAP M SWAP`.
    pub fn swap_factors(&self, d: usize) -> Result<HermitianMatrix, MatrixError> {
        if self.dim() != d * d {
            return Err(MatrixError::DimensionMismatch { expected: d * d, found: self.dim() });
        }
        let swap = |k: usize| (k % d) * d + k / d;
        Ok(Self { mat: Mat::from_fn(self.dim(), self.dim(), |i, j| self.mat[(swap(i), swap(j))]) })
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in Hermitian sum");
        HermitianMatrix { mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in Hermitian difference");
        HermitianMatrix { mat: &self.mat - &rhs.mat }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scaled(rhs)
    }
}
