//! Gaussian beta-ensembles, Haar eigenbases, random projectors and
//! discrete-spectrum local terms.
//!
//! The Gaussian ensembles are normalised by the density
//! `exp(-(beta/4) tr M^2)`: diagonal entries have variance `2/beta` and every
//! real component of an off-diagonal entry has variance `1/beta`. With this
//! convention the samplers and [`eigenvalue_log_density`] describe the same
//! distribution.

use faer::{c64, Mat};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{HermitianMatrix, MatrixError};
use crate::seed::rng_from_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("unsupported ensemble index beta = {0} (only 1 and 2 are available)")]
    UnsupportedBeta(u32),
    #[error("matrix dimension must be positive")]
    ZeroDimension,
    #[error("rank {rank} out of range for dimension {dim}")]
    RankOutOfRange { rank: usize, dim: usize },
    #[error("invalid discrete spectrum law: {0}")]
    InvalidLaw(String),
    #[error("need at least two eigenvalues, got {0}")]
    TooFewEigenvalues(usize),
    #[error("eigenvalues must be sorted ascending")]
    Unsorted,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Dyson index of the ensemble. The symplectic case is deliberately absent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Beta {
    /// Real symmetric matrices (GOE).
    Orthogonal,
    /// Complex Hermitian matrices (GUE).
    Unitary,
}

impl Beta {
    pub fn value(self) -> f64 {
        match self {
            Beta::Orthogonal => 1.0,
            Beta::Unitary => 2.0,
        }
    }
}

impl TryFrom<u32> for Beta {
    type Error = EnsembleError;
    fn try_from(v: u32) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Beta::Orthogonal),
            2 => Ok(Beta::Unitary),
            other => Err(EnsembleError::UnsupportedBeta(other)),
        }
    }
}

impl From<Beta> for u32 {
    fn from(b: Beta) -> u32 {
        match b {
            Beta::Orthogonal => 1,
            Beta::Unitary => 2,
        }
    }
}

impl std::fmt::Display for Beta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", u32::from(*self))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnsembleParams {
    pub n: usize,
    pub beta: Beta,
    pub seed: u64,
}

impl EnsembleParams {
    pub fn new(n: usize, beta: u32, seed: u64) -> Result<Self, EnsembleError> {
        if n == 0 {
            return Err(EnsembleError::ZeroDimension);
        }
        Ok(Self { n, beta: Beta::try_from(beta)?, seed })
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws from the Gaussian beta-ensemble using a caller-supplied generator.
pub fn sample_gaussian_with<R: Rng + ?Sized>(n: usize, beta: Beta, rng: &mut R) -> HermitianMatrix {
    let b = beta.value();
    let diag_sd = (2.0 / b).sqrt();
    let off_sd = (1.0 / b).sqrt();
    let mut m = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = c64::new(diag_sd * normal(rng), 0.0);
        for j in i + 1..n {
            let z = match beta {
                Beta::Orthogonal => c64::new(off_sd * normal(rng), 0.0),
                Beta::Unitary => c64::new(off_sd * normal(rng), off_sd * normal(rng)),
            };
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianMatrix::new(m).expect("Gaussian sample is Hermitian by construction")
}

/// Draws one matrix from the Gaussian beta-ensemble with density
/// proportional to `exp(-(beta/4) tr M^2)`.
pub fn sample_gaussian(params: &EnsembleParams) -> HermitianMatrix {
    let mut rng = rng_from_seed(params.seed);
    sample_gaussian_with(params.n, params.beta, &mut rng)
}

/// Logarithm of the joint eigenvalue density
/// `Z exp(-(beta/4) sum l^2) prod_{j<k} |l_j - l_k|^beta`.
///
/// The normalisation `Z` is included only for `n = 2, beta = 2` where it
/// equals `1 / (2 pi)` for ordered eigenvalues; otherwise the unnormalised
/// log-density is returned. Coinciding eigenvalues give `-inf`.
pub fn eigenvalue_log_density(lambdas: &[f64], beta: Beta) -> f64 {
    let b = beta.value();
    let mut log_rho = -(b / 4.0) * lambdas.iter().map(|l| l * l).sum::<f64>();
    for (j, &lj) in lambdas.iter().enumerate() {
        for &lk in &lambdas[j + 1..] {
            let gap = (lj - lk).abs();
            if gap == 0.0 {
                return f64::NEG_INFINITY;
            }
            log_rho += b * gap.ln();
        }
    }
    if lambdas.len() == 2 && beta == Beta::Unitary {
        log_rho -= (2.0 * std::f64::consts::PI).ln();
    }
    log_rho
}

/// Closest real multiple of the identity in Frobenius norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityDistance {
    pub a_star: f64,
    pub dist: f64,
}

/// Minimises `||M - a I||_F` over real `a`. The minimiser is `tr(M) / dim`
/// and the minimum is `sqrt(||M||_F^2 - tr(M)^2 / dim)`; the distance is
/// evaluated directly as `||M - a* I||_F` to avoid cancellation when `M`
/// is close to an identity multiple.
pub fn dist_to_identity_multiple(m: &HermitianMatrix) -> IdentityDistance {
    let n = m.dim();
    let a_star = m.trace() / n as f64;
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            let mut z = m.get(i, j);
            if i == j {
                z -= c64::new(a_star, 0.0);
            }
            acc += z.norm_sqr();
        }
    }
    IdentityDistance { a_star, dist: acc.sqrt() }
}

/// Smallest consecutive difference of a sorted list.
pub fn min_spacing(lambdas: &[f64]) -> Result<f64, EnsembleError> {
    if lambdas.len() < 2 {
        return Err(EnsembleError::TooFewEigenvalues(lambdas.len()));
    }
    if lambdas.windows(2).any(|w| w[1] < w[0]) {
        return Err(EnsembleError::Unsorted);
    }
    Ok(lambdas.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min))
}

/// Haar-distributed unitary (orthogonal for `beta = 1`) via QR of a Ginibre
/// matrix, with the phases of `diag(R)` moved into `Q`.
pub fn sample_haar_with<R: Rng + ?Sized>(dim: usize, beta: Beta, rng: &mut R) -> Mat<c64> {
    let g = Mat::<c64>::from_fn(dim, dim, |_, _| match beta {
        Beta::Orthogonal => c64::new(normal(rng), 0.0),
        Beta::Unitary => c64::new(normal(rng), normal(rng)),
    });
    // from_fn visits entries in a fixed (column-major) order, so the draw
    // sequence is reproducible.
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    Mat::from_fn(dim, dim, |i, j| {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c64::new(1.0, 0.0) };
        q[(i, j)] * phase
    })
}

pub fn sample_haar_eigenvectors(dim: usize, beta: Beta, seed: u64) -> Result<Mat<c64>, EnsembleError> {
    if dim == 0 {
        return Err(EnsembleError::ZeroDimension);
    }
    let mut rng = rng_from_seed(seed);
    Ok(sample_haar_with(dim, beta, &mut rng))
}

/// `U diag(eigs) U^dagger` with Haar `U`.
pub fn with_haar_eigenbasis<R: Rng + ?Sized>(eigs: &[f64], beta: Beta, rng: &mut R) -> HermitianMatrix {
    let dim = eigs.len();
    let u = sample_haar_with(dim, beta, rng);
    let scaled = Mat::from_fn(dim, dim, |i, j| u[(i, j)] * eigs[j]);
    let m = &scaled * u.adjoint();
    HermitianMatrix::hermitize(m).expect("finite spectrum gives a finite matrix")
}

pub fn sample_projector_with<R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    beta: Beta,
    rng: &mut R,
) -> Result<HermitianMatrix, EnsembleError> {
    if dim == 0 {
        return Err(EnsembleError::ZeroDimension);
    }
    if rank > dim {
        return Err(EnsembleError::RankOutOfRange { rank, dim });
    }
    let eigs: Vec<f64> = (0..dim).map(|k| if k < dim - rank { 0.0 } else { 1.0 }).collect();
    Ok(with_haar_eigenbasis(&eigs, beta, rng))
}

/// Random orthogonal projector of the given rank with a Haar eigenbasis.
pub fn sample_projector(dim: usize, rank: usize, beta: Beta, seed: u64) -> Result<HermitianMatrix, EnsembleError> {
    let mut rng = rng_from_seed(seed);
    sample_projector_with(dim, rank, beta, &mut rng)
}

/// A finite distribution over local eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpectrumLaw {
    atoms: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteSpectrumLaw {
    /// Atoms must be finite and strictly ascending; probabilities
    /// non-negative and summing to one within `1e-12`.
    pub fn new(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self, EnsembleError> {
        let bad = |msg: &str| Err(EnsembleError::InvalidLaw(msg.to_string()));
        if atoms.is_empty() {
            return bad("at least one atom is required");
        }
        if atoms.len() != probs.len() {
            return bad("atoms and probabilities differ in length");
        }
        if atoms.iter().chain(&probs).any(|x| !x.is_finite()) {
            return bad("non-finite entry");
        }
        if atoms.windows(2).any(|w| w[1] <= w[0]) {
            return bad("atoms must be strictly ascending");
        }
        if probs.iter().any(|&p| p < 0.0) {
            return bad("negative probability");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return bad(&format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { atoms, probs })
    }

    /// The law putting all mass on `value`.
    pub fn point(value: f64) -> Self {
        Self { atoms: vec![value], probs: vec![1.0] }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.atoms.len() == 1 {
            return self.atoms[0];
        }
        let idx = WeightedIndex::new(&self.probs).expect("validated weights");
        self.atoms[idx.sample(rng)]
    }

    /// Restriction to the atoms strictly above the lowest one, renormalised.
    pub fn excited(&self) -> Option<Self> {
        let rest: f64 = self.probs[1..].iter().sum();
        if self.atoms.len() < 2 || rest <= 0.0 {
            return None;
        }
        Some(Self {
            atoms: self.atoms[1..].to_vec(),
            probs: self.probs[1..].iter().map(|p| p / rest).collect(),
        })
    }
}

/// Draws `dim` i.i.d. eigenvalues from `law` and a Haar eigenbasis.
/// Returns the matrix together with the sorted drawn spectrum.
pub fn sample_discrete_term_with<R: Rng + ?Sized>(
    dim: usize,
    law: &DiscreteSpectrumLaw,
    beta: Beta,
    rng: &mut R,
) -> Result<(HermitianMatrix, Vec<f64>), EnsembleError> {
    if dim == 0 {
        return Err(EnsembleError::ZeroDimension);
    }
    let mut eigs: Vec<f64> = (0..dim).map(|_| law.draw(rng)).collect();
    eigs.sort_by(f64::total_cmp);
    Ok((with_haar_eigenbasis(&eigs, beta, rng), eigs))
}

pub fn sample_discrete_term(
    dim: usize,
    law: &DiscreteSpectrumLaw,
    beta: Beta,
    seed: u64,
) -> Result<HermitianMatrix, EnsembleError> {
    let mut rng = rng_from_seed(seed);
    Ok(sample_discrete_term_with(dim, law, beta, &mut rng)?.0)
}
