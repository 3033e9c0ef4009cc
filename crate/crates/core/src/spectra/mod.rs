//! Eigensolvers, degeneracy clustering, gaps, Weyl intervals, densities of
//! states and Schmidt spectra.

mod dense;
mod lanczos;
mod schmidt;

pub use dense::{dense_spectrum, dense_spectrum_with_cap};
pub use lanczos::{lanczos_lowest, LanczosOptions};
pub use schmidt::{schmidt_spectrum, SchmidtSpectrum};

use std::fmt::Write as _;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::MatrixError;
use crate::tridiag::TridiagError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Tridiag(#[from] TridiagError),
    #[error("dimension {dim} exceeds the dense cap {cap}")]
    DenseCap { dim: usize, cap: usize },
    #[error("Lanczos did not converge after {iterations} iterations; best estimates {best:?} (residuals {residuals:?})")]
    NotConverged { iterations: usize, best: Vec<f64>, residuals: Vec<f64> },
    #[error("requested {k} eigenvalues of a {dim}-dimensional operator")]
    TooManyEigenvalues { k: usize, dim: usize },
    #[error("k must be at least 1")]
    ZeroRequest,
    #[error("no distinct excited level at this resolution (tau = {tau:e})")]
    SingleCluster { tau: f64 },
    #[error("empty spectrum")]
    Empty,
    #[error("eigenvalue index {index} out of range for {len} eigenvalues")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("perturbation norm must be finite and non-negative, got {0}")]
    BadNorm(f64),
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("invalid histogram range [{lo}, {hi})")]
    BadRange { lo: f64, hi: f64 },
    #[error("state has length {found}, expected {expected}")]
    StateLength { expected: usize, found: usize },
    #[error("bipartition must leave both sides non-empty")]
    TrivialBipartition,
    #[error("site {site} out of range for {num_sites} sites")]
    SiteOutOfRange { site: usize, num_sites: usize },
    #[error("state has zero norm")]
    ZeroState,
}

impl SpectraError {
    /// True for numerical failures as opposed to invalid requests.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            SpectraError::NotConverged { .. } | SpectraError::Tridiag(_) | SpectraError::Matrix(MatrixError::Decomposition(_))
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dense,
    Lanczos,
}

/// Sorted eigenvalues with optional eigenvectors (one per column).
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Mat<c64>>,
    pub method: Method,
    pub degeneracy_tol: f64,
    /// `||H v - lambda v||` per pair, when measured.
    pub residuals: Option<Vec<f64>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Column `k` of the eigenvector matrix.
    pub fn vector(&self, k: usize) -> Option<Vec<c64>> {
        let v = self.eigenvectors.as_ref()?;
        (k < v.ncols()).then(|| (0..v.nrows()).map(|i| v[(i, k)]).collect())
    }

    pub fn gap(&self) -> Result<GapReport, SpectraError> {
        gap(&self.eigenvalues, self.degeneracy_tol)
    }

    /// `index,eigenvalue` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, v) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(out, "{i},{v}");
        }
        out
    }
}

/// Default degeneracy tolerance `1e-8 * max(1, width)`.
pub fn default_tau(lambdas: &[f64]) -> f64 {
    let width = match (lambdas.first(), lambdas.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    1e-8 * width.max(1.0)
}

/// A group of eigenvalues within `tau` of their neighbours.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

/// Greedy left-to-right clustering of a sorted list: a new cluster starts
/// whenever consecutive values differ by more than `tau`. Each cluster is
/// represented by its mean.
pub fn cluster_distinct(lambdas: &[f64], tau: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    let mut sum = 0.0;
    let mut start = 0;
    for (i, &v) in lambdas.iter().enumerate() {
        if i > 0 && v - lambdas[i - 1] > tau {
            let m = i - start;
            out.push(Cluster { value: sum / m as f64, multiplicity: m });
            sum = 0.0;
            start = i;
        }
        sum += v;
    }
    if !lambdas.is_empty() {
        let m = lambdas.len() - start;
        out.push(Cluster { value: sum / m as f64, multiplicity: m });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub lambda0: f64,
    pub lambda1_distinct: f64,
    pub gap: f64,
    pub ground_degeneracy: usize,
    pub tau: f64,
}

impl GapReport {
    pub const CSV_HEADER: &'static str = "lambda0,lambda1,gap,degeneracy,tau";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.lambda0, self.lambda1_distinct, self.gap, self.ground_degeneracy, self.tau)
    }
}

/// Gap between the two lowest distinct clusters of a sorted list.
pub fn gap(lambdas: &[f64], tau: f64) -> Result<GapReport, SpectraError> {
    if lambdas.is_empty() {
        return Err(SpectraError::Empty);
    }
    let clusters = cluster_distinct(lambdas, tau);
    if clusters.len() < 2 {
        return Err(SpectraError::SingleCluster { tau });
    }
    let (c0, c1) = (clusters[0], clusters[1]);
    Ok(GapReport {
        lambda0: c0.value,
        lambda1_distinct: c1.value,
        gap: c1.value - c0.value,
        ground_degeneracy: c0.multiplicity,
        tau,
    })
}

/// `[lambda_j - ||V||, lambda_j + ||V||]`, which contains `lambda_j(H + V)`.
pub fn weyl_interval(eigenvalues: &[f64], perturbation_norm: f64, j: usize) -> Result<(f64, f64), SpectraError> {
    if !(perturbation_norm.is_finite() && perturbation_norm >= 0.0) {
        return Err(SpectraError::BadNorm(perturbation_norm));
    }
    let l = *eigenvalues.get(j).ok_or(SpectraError::IndexOutOfRange { index: j, len: eigenvalues.len() })?;
    Ok((l - perturbation_norm, l + perturbation_norm))
}

/// Normalised histogram: `fractions[b]` is the share of eigenvalues in bin `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DosHistogram {
    pub edges: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl DosHistogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,fraction\n");
        for (b, f) in self.fractions.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.edges[b], self.edges[b + 1], f);
        }
        out
    }
}

/// Bins are half-open `[lo, hi)` except the last, which is closed. The
/// default range is `[min, max]`; a zero-width spectrum is widened to
/// `value +- 0.5`. Values outside an explicit range are counted in the
/// normalisation but in no bin.
pub fn dos_histogram(lambdas: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<DosHistogram, SpectraError> {
    if bins == 0 {
        return Err(SpectraError::NoBins);
    }
    if lambdas.is_empty() {
        return Err(SpectraError::Empty);
    }
    let (lo, hi) = match range {
        Some((lo, hi)) => (lo, hi),
        None => {
            let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        }
    };
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(SpectraError::BadRange { lo, hi });
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in lambdas {
        if v < lo || v > hi {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let total = lambdas.len() as f64;
    Ok(DosHistogram {
        edges: (0..=bins).map(|b| if b == bins { hi } else { lo + b as f64 * width }).collect(),
        fractions: counts.iter().map(|&c| c as f64 / total).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_gaussian_with, Beta};
    use crate::matrix::HermitianMatrix;
    use crate::seed::rng_from_seed;

    #[test]
    fn clustering_examples() {
        let c = cluster_distinct(&[0.0, 1e-12, 1.0], 1e-9);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].multiplicity, 2);
        assert!(c[0].value.abs() < 1e-12);
        assert_eq!(c[1], Cluster { value: 1.0, multiplicity: 1 });
        let c = cluster_distinct(&[0.0, 1.0, 2.0], 1e-9);
        assert_eq!(c.iter().map(|c| c.multiplicity).collect::<Vec<_>>(), vec![1, 1, 1]);
        assert!(cluster_distinct(&[], 1.0).is_empty());
    }

    #[test]
    fn gap_examples() {
        let g = gap(&[0.0, 0.0, 1.0], 1e-9).unwrap();
        assert_eq!(g.gap, 1.0);
        assert_eq!(g.ground_degeneracy, 2);
        assert!(matches!(gap(&[2.0, 2.0], 1e-9), Err(SpectraError::SingleCluster { .. })));
        assert!(matches!(gap(&[], 1e-9), Err(SpectraError::Empty)));
    }

    #[test]
    fn default_tau_scales_with_width() {
        assert_eq!(default_tau(&[0.0, 0.5]), 1e-8);
        assert_eq!(default_tau(&[-10.0, 10.0]), 2e-7);
    }

    #[test]
    fn weyl_examples() {
        assert_eq!(weyl_interval(&[0.5], 0.0, 0).unwrap(), (0.5, 0.5));
        let (lo, hi) = weyl_interval(&[0.0, 1.0], 0.1, 0).unwrap();
        assert!(lo <= 0.1 && 0.1 <= hi);
        assert!(weyl_interval(&[0.0], 0.1, 1).is_err());
        assert!(weyl_interval(&[0.0], -0.1, 0).is_err());
    }

    #[test]
    fn weyl_sandwich_on_random_pairs() {
        let mut rng = rng_from_seed(2024);
        for _ in 0..200 {
            let h = sample_gaussian_with(40, Beta::Unitary, &mut rng);
            let v = sample_gaussian_with(40, Beta::Unitary, &mut rng).scaled(0.05);
            let base = dense_spectrum(&h, false).unwrap().eigenvalues;
            let sum = dense_spectrum(&(&h + &v), false).unwrap().eigenvalues;
            let norm = v.operator_norm().unwrap();
            for (j, l) in sum.iter().enumerate() {
                let (lo, hi) = weyl_interval(&base, norm, j).unwrap();
                assert!(lo - 1e-12 <= *l && *l <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(dos_histogram(&[3.0], 1, None).unwrap().fractions, vec![1.0]);
        let h = dos_histogram(&[0.0, 1.0, 2.0, 3.0], 2, Some((0.0, 4.0))).unwrap();
        assert_eq!(h.fractions, vec![0.5, 0.5]);
        assert_eq!(h.edges, vec![0.0, 2.0, 4.0]);
        assert!(dos_histogram(&[], 3, None).is_err());
        assert!(dos_histogram(&[1.0], 0, None).is_err());

        let mut rng = rng_from_seed(5);
        let m = sample_gaussian_with(1 << 10, Beta::Unitary, &mut rng);
        let eigs = m.eigenvalues().unwrap();
        let h = dos_histogram(&eigs, 37, None).unwrap();
        let total: f64 = h.fractions.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_csv() {
        let s = dense_spectrum(&HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]), false).unwrap();
        assert_eq!(s.to_csv(), "index,eigenvalue\n0,1\n1,2\n2,3\n");
    }
}
