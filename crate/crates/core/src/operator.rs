//! Matrix-free linear operators on complex state vectors.

use faer::c64;

use crate::matrix::HermitianMatrix;

/// A Hermitian operator that can be applied to a vector.
///
/// Implementations must be deterministic: the same input gives bit-identical
/// output regardless of thread count.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// Writes `A x` into `y`, overwriting it.
    fn apply(&self, x: &[c64], y: &mut [c64]);
}

impl LinearOperator for HermitianMatrix {
    fn dim(&self) -> usize {
        HermitianMatrix::dim(self)
    }

    fn apply(&self, x: &[c64], y: &mut [c64]) {
        let n = self.dim();
        let m = self.as_mat();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            let mut acc = c64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate().take(n) {
                acc += m[(i, j)] * xj;
            }
            *yi = acc;
        }
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[c64], y: &mut [c64]) {
        (**self).apply(x, y)
    }
}

/// `-A`, used to reach the top of the spectrum with a lowest-eigenvalue solver.
pub struct Negated<O>(pub O);

impl<O: LinearOperator> LinearOperator for Negated<O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[c64], y: &mut [c64]) {
        self.0.apply(x, y);
        for v in y.iter_mut() {
            *v = -*v;
        }
    }
}

/// `<a, b>` with the first argument conjugated.
pub fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).fold(c64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm(a: &[c64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha x`.
pub fn axpy(alpha: c64, x: &[c64], y: &mut [c64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [c64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

/// Applies `op` to a freshly allocated output.
pub fn apply_new<O: LinearOperator + ?Sized>(op: &O, x: &[c64]) -> Vec<c64> {
    let mut y = vec![c64::new(0.0, 0.0); op.dim()];
    op.apply(x, &mut y);
    y
}
