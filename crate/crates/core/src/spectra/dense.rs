//! Full diagonalisation of dense Hermitian matrices.


use super::{default_tau, Method, SpectraError, Spectrum};
use crate::hamiltonian::DEFAULT_DENSE_CAP;
use crate::matrix::HermitianMatrix;

/// All eigenvalues (and optionally eigenvectors) of `h`, capped at the
/// default dense dimension.
pub fn dense_spectrum(h: &HermitianMatrix, want_vectors: bool) -> Result<Spectrum, SpectraError> {
    dense_spectrum_with_cap(h, want_vectors, DEFAULT_DENSE_CAP)
}

pub fn dense_spectrum_with_cap(h: &HermitianMatrix, want_vectors: bool, cap: usize) -> Result<Spectrum, SpectraError> {
    let dim = h.dim();
    if dim > cap {
        return Err(SpectraError::DenseCap { dim, cap });
    }
    if !want_vectors {
        let eigenvalues = h.eigenvalues()?;
        let degeneracy_tol = default_tau(&eigenvalues);
        return Ok(Spectrum { eigenvalues, eigenvectors: None, method: Method::Dense, degeneracy_tol, residuals: None });
    }
    let (eigenvalues, vectors) = h.eigen(true)?;
    let vectors = vectors.expect("eigenvectors were requested");
    let hv = h.as_mat() * vectors.as_ref();
    let residuals = (0..dim)
        .map(|k| (0..dim).map(|i| (hv[(i, k)] - vectors[(i, k)] * eigenvalues[k]).norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let degeneracy_tol = default_tau(&eigenvalues);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: Some(vectors),
        method: Method::Dense,
        degeneracy_tol,
        residuals: Some(residuals),
    })
}
