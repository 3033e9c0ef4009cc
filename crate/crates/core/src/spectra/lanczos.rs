//! Lanczos iteration with full reorthogonalisation and locking.
//!
//! Eigenpairs are found one at a time. Round `r` starts from a seeded random
//! vector orthogonal to the `r` locked eigenvectors and runs Lanczos in their
//! orthogonal complement until the lowest Ritz pair meets the residual
//! tolerance; that pair is then locked. Because each round works in the
//! complement of the vectors already found, degenerate eigenvalues are
//! returned with their full multiplicity. When the Krylov basis reaches
//! `krylov_dim` vectors the round restarts from its current best Ritz vector.

use faer::{c64, Mat};
use rand::Rng;
use rand_distr::StandardNormal;

use serde::{Deserialize, Serialize};
use super::{default_tau, Method, SpectraError, Spectrum};
use crate::operator::{apply_new, axpy, dot, norm, scale, LinearOperator};
use crate::seed::{derive_seed, rng_from_seed, stream};
use crate::tridiag::{tridiag_eigen, tridiag_eigen_full};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    /// Matrix-vector products allowed per eigenpair.
    pub max_iter: usize,
    /// Largest Krylov basis kept before a restart.
    pub krylov_dim: usize,
    /// Residual tolerance relative to `max(1, |spectrum| estimate)`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { max_iter: 3000, krylov_dim: 200, tol: 1e-8, seed: 0 }
    }
}

fn orthogonalize(v: &mut [c64], basis: &[Vec<c64>]) {
    // Two passes of classical Gram-Schmidt.
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
}

fn random_start(dim: usize, seed: u64, round: usize, locked: &[Vec<c64>]) -> Vec<c64> {
    let mut attempt = 0u64;
    loop {
        let mut rng = rng_from_seed(derive_seed(seed, &[stream::LANCZOS_START, round as u64, attempt]));
        let mut v: Vec<c64> = (0..dim).map(|_| c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        orthogonalize(&mut v, locked);
        let n = norm(&v);
        if n > 1e-8 {
            scale(1.0 / n, &mut v);
            return v;
        }
        attempt += 1;
    }
}

struct RoundOutcome {
    value: f64,
    vector: Vec<c64>,
    residual: f64,
    converged: bool,
}

/// One locking round: lowest eigenpair of `op` restricted to the complement
/// of `locked`.
fn lowest_pair<O: LinearOperator + ?Sized>(
    op: &O,
    locked: &[Vec<c64>],
    start: Vec<c64>,
    opts: &LanczosOptions,
    scale_est: &mut f64,
) -> Result<RoundOutcome, SpectraError> {
    let dim = op.dim();
    let room = dim - locked.len();
    let mut start = start;
    let mut used = 0usize;
    let mut best: Option<RoundOutcome> = None;

    while used < opts.max_iter {
        let mut basis: Vec<Vec<c64>> = vec![start.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let cap = opts.krylov_dim.max(2).min(room);
        let converged;

        loop {
            let j = basis.len() - 1;
            let mut w = apply_new(op, &basis[j]);
            used += 1;
            let alpha = dot(&basis[j], &w).re;
            alphas.push(alpha);
            axpy(c64::new(-alpha, 0.0), &basis[j], &mut w);
            if j > 0 {
                axpy(c64::new(-betas[j - 1], 0.0), &basis[j - 1], &mut w);
            }
            orthogonalize(&mut w, locked);
            orthogonalize(&mut w, &basis);
            let beta = norm(&w);

            let tri = tridiag_eigen(&alphas, &betas, &[j])?;
            *scale_est = scale_est.max(tri.values[0].abs()).max(tri.values[tri.values.len() - 1].abs());
            let estimate = beta * tri.rows[0][0].abs();
            let threshold = opts.tol * scale_est.max(1.0);
            let invariant = beta <= 1e-14 * scale_est.max(1.0) || basis.len() == room;
            if estimate <= threshold || invariant {
                converged = true;
                break;
            }
            if basis.len() >= cap || used >= opts.max_iter {
                converged = false;
                break;
            }
            scale(1.0 / beta, &mut w);
            betas.push(beta);
            basis.push(w);
        }

        let full = tridiag_eigen_full(&alphas, &betas)?;
        let coeffs = full.vector(0);
        let mut vector = vec![c64::new(0.0, 0.0); dim];
        for (c, b) in coeffs.iter().zip(&basis) {
            axpy(c64::new(*c, 0.0), b, &mut vector);
        }
        orthogonalize(&mut vector, locked);
        let n = norm(&vector);
        scale(1.0 / n, &mut vector);
        let hv = apply_new(op, &vector);
        let value = dot(&vector, &hv).re;
        let residual = norm(&hv.iter().zip(&vector).map(|(a, b)| a - b * value).collect::<Vec<_>>());
        let threshold = opts.tol * scale_est.max(1.0);
        let done = converged && residual <= threshold.max(100.0 * f64::EPSILON * scale_est.max(1.0));
        let candidate = RoundOutcome { value, vector, residual, converged: done };
        if done {
            return Ok(candidate);
        }
        start = candidate.vector.clone();
        if best.as_ref().is_none_or(|b| candidate.residual < b.residual) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart cycle ran"))
}

/// The `k` lowest eigenpairs of a Hermitian operator.
///
/// Returns `NotConverged` with the best estimates when an eigenpair fails to
/// reach `tol * max(1, |spectrum|)` within `max_iter` products.
pub fn lanczos_lowest<O: LinearOperator + ?Sized>(op: &O, k: usize, opts: &LanczosOptions) -> Result<Spectrum, SpectraError> {
    let dim = op.dim();
    if k == 0 {
        return Err(SpectraError::ZeroRequest);
    }
    if k > dim {
        return Err(SpectraError::TooManyEigenvalues { k, dim });
    }
    let mut locked: Vec<Vec<c64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut scale_est = 0.0f64;
    for round in 0..k {
        let start = random_start(dim, opts.seed, round, &locked);
        let out = lowest_pair(op, &locked, start, opts, &mut scale_est)?;
        values.push(out.value);
        residuals.push(out.residual);
        if !out.converged {
            return Err(SpectraError::NotConverged { iterations: opts.max_iter, best: values, residuals });
        }
        locked.push(out.vector);
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let vectors = Mat::<c64>::from_fn(dim, k, |i, j| locked[order[j]][i]);
    let residuals = order.iter().map(|&i| residuals[i]).collect();
    let degeneracy_tol = default_tau(&eigenvalues);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: Some(vectors),
        method: Method::Lanczos,
        degeneracy_tol,
        residuals: Some(residuals),
    })
}
