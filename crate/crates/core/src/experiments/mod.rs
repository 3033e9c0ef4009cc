//! Monte Carlo drivers, log-log regression, rare-region scans, gap sweeps
//! and the rare-region scaling arithmetic.
//!
//! Every trial draws from its own generator seeded by
//! `derive_seed(master, [stream, point, trial])`, and results are reduced in
//! a fixed order, so outputs do not depend on the number of workers.

mod scan;
mod sweep;

pub use scan::{rare_region_scan, ScanRow};
pub use sweep::{gap_vs_size_sweep, summarize_sweep, sweep_csv, SweepModel, SweepOptions, SweepRow, SweepSummary};

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensembles::{dist_to_identity_multiple, min_spacing, sample_gaussian_with, Beta, EnsembleError};
use crate::seed::{derive_seed, rng_from_seed, stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error("eps grid needs at least {min} points, got {got}")]
    GridTooShort { min: usize, got: usize },
    #[error("eps grid must be strictly decreasing and positive")]
    GridOrder,
    #[error("trials must be positive")]
    NoTrials,
    #[error("workers must be positive")]
    NoWorkers,
    #[error("need n >= {min} for this experiment, got {got}")]
    DimensionTooSmall { min: usize, got: usize },
    #[error("invalid scaling input: {0}")]
    Scaling(String),
    #[error("could not start a worker pool: {0}")]
    Pool(String),
    #[error("invalid sweep: {0}")]
    Sweep(String),
}

/// Minimum number of grid points for a slope fit.
pub const MIN_GRID_POINTS: usize = 4;
/// Expected successes per point below which a warning is issued.
pub const MIN_EXPECTED_COUNT: u64 = 50;

/// Weighted least-squares slope with a 3-sigma interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Fits `y = a + b x` with weights `w`.
pub fn weighted_slope(x: &[f64], y: &[f64], w: &[f64]) -> Option<SlopeFit> {
    if x.len() < 2 || x.len() != y.len() || x.len() != w.len() {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * (a - xm) * (c - ym)).sum();
    let slope = sxy / sxx;
    let stderr = (1.0 / sxx).sqrt();
    Some(SlopeFit { slope, intercept: ym - slope * xm, stderr, ci_lo: slope - 3.0 * stderr, ci_hi: slope + 3.0 * stderr })
}

/// Candidate exponents of `P[min_a ||M - aI||_F <= eps]`: the value `n^2`
/// and the dimension of the traceless matrix space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedExponents {
    pub n_squared: u64,
    pub dimension_count: u64,
}

pub fn predicted_exponents(n: usize, beta: Beta) -> PredictedExponents {
    let n = n as u64;
    let dimension_count = match beta {
        Beta::Unitary => n * n - 1,
        Beta::Orthogonal => n * (n + 1) / 2 - 1,
    };
    PredictedExponents { n_squared: n * n, dimension_count }
}

/// Per-point probabilities with binomial errors and an optional slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub x_values: Vec<f64>,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
    pub successes: Vec<u64>,
    pub trials: u64,
    pub slope: Option<SlopeFit>,
    pub predicted: Option<PredictedExponents>,
    pub seed: u64,
    /// Grid points without a single success, excluded from the fit.
    pub dropped: Vec<f64>,
    pub warnings: Vec<String>,
}

impl McResult {
    /// `eps,estimate,stderr,trials` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,estimate,stderr,trials\n");
        for i in 0..self.x_values.len() {
            let _ = writeln!(out, "{},{},{},{}", self.x_values[i], self.estimates[i], self.stderr[i], self.trials);
        }
        out
    }

    /// `slope,ci_lo,ci_hi,paper_exponent,dimension_count_exponent`; missing
    /// fields are left empty.
    pub fn slope_csv(&self) -> String {
        let (s, lo, hi) = match self.slope {
            Some(f) => (f.slope.to_string(), f.ci_lo.to_string(), f.ci_hi.to_string()),
            None => Default::default(),
        };
        let (p, d) = match self.predicted {
            Some(p) => (p.n_squared.to_string(), p.dimension_count.to_string()),
            None => Default::default(),
        };
        format!("slope,ci_lo,ci_hi,paper_exponent,dimension_count_exponent\n{s},{lo},{hi},{p},{d}\n")
    }
}

fn validate_grid(eps_grid: &[f64], trials: u64, workers: usize) -> Result<(), ExperimentError> {
    if eps_grid.len() < MIN_GRID_POINTS {
        return Err(ExperimentError::GridTooShort { min: MIN_GRID_POINTS, got: eps_grid.len() });
    }
    if eps_grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ExperimentError::GridOrder);
    }
    if trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    if workers == 0 {
        return Err(ExperimentError::NoWorkers);
    }
    Ok(())
}

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool, ExperimentError> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| ExperimentError::Pool(e.to_string()))
}

/// Counts, for each grid point independently, the trials whose statistic is
/// at most that point's eps.
fn count_events<F>(eps_grid: &[f64], trials: u64, seed: u64, label: u64, workers: usize, stat: F) -> Result<Vec<u64>, ExperimentError>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let pool = pool(workers)?;
    Ok(pool.install(|| {
        eps_grid
            .iter()
            .enumerate()
            .map(|(point, &eps)| {
                (0..trials)
                    .into_par_iter()
                    .filter(|&t| {
                        let mut rng = rng_from_seed(derive_seed(seed, &[label, point as u64, t]));
                        stat(&mut rng) <= eps
                    })
                    .count() as u64
            })
            .collect()
    }))
}

fn finish(eps_grid: &[f64], counts: Vec<u64>, trials: u64, seed: u64, predicted: Option<PredictedExponents>) -> McResult {
    let t = trials as f64;
    let estimates: Vec<f64> = counts.iter().map(|&c| c as f64 / t).collect();
    let stderr: Vec<f64> = estimates.iter().map(|p| (p * (1.0 - p) / t).sqrt()).collect();
    let mut warnings = Vec::new();
    let mut dropped = Vec::new();
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &eps) in eps_grid.iter().enumerate() {
        if counts[i] == 0 {
            dropped.push(eps);
            warnings.push(format!("no successes at eps = {eps}; point dropped from the fit"));
            continue;
        }
        if counts[i] < MIN_EXPECTED_COUNT {
            warnings.push(format!("only {} successes at eps = {eps}; estimate is noisy", counts[i]));
        }
        let p = estimates[i];
        let var = ((1.0 - p) / (p * t)).max(1.0 / (t * t));
        xs.push(eps.ln());
        ys.push(p.ln());
        ws.push(1.0 / var);
    }
    let slope = if xs.len() >= MIN_GRID_POINTS {
        weighted_slope(&xs, &ys, &ws)
    } else {
        warnings.push(format!("only {} usable points; no slope fitted", xs.len()));
        None
    };
    McResult {
        x_values: eps_grid.to_vec(),
        estimates,
        stderr,
        successes: counts,
        trials,
        slope,
        predicted,
        seed,
        dropped,
        warnings,
    }
}

/// Estimates `P[min_a ||M - aI||_F <= eps]` for Gaussian `M` on each point
/// of a decreasing grid and fits the log-log slope.
pub fn mc_near_identity_exponent(
    n: usize,
    beta: Beta,
    eps_grid: &[f64],
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<McResult, ExperimentError> {
    if n == 0 {
        return Err(EnsembleError::ZeroDimension.into());
    }
    validate_grid(eps_grid, trials, workers)?;
    let counts = count_events(eps_grid, trials, seed, stream::MC_TRIAL, workers, |rng| {
        dist_to_identity_multiple(&sample_gaussian_with(n, beta, rng)).dist
    })?;
    Ok(finish(eps_grid, counts, trials, seed, Some(predicted_exponents(n, beta))))
}

/// Estimates `P[lambda_1 - lambda_0 <= eps]` for the two lowest eigenvalues
/// of a Gaussian matrix.
pub fn mc_spacing_exponent(
    n: usize,
    beta: Beta,
    eps_grid: &[f64],
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<McResult, ExperimentError> {
    if n < 2 {
        return Err(ExperimentError::DimensionTooSmall { min: 2, got: n });
    }
    validate_grid(eps_grid, trials, workers)?;
    let counts = count_events(eps_grid, trials, seed, stream::MC_TRIAL, workers, |rng| {
        let eigs = sample_gaussian_with(n, beta, rng).eigenvalues().expect("Gaussian samples are finite");
        min_spacing(&eigs[..2]).expect("two sorted eigenvalues")
    })?;
    Ok(finish(eps_grid, counts, trials, seed, None))
}

/// `1 / (z d^4 + 4)`, the exponent in `eps(N) ~ N^(-1/(z d^4 + 4))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponent {
    pub denominator: u64,
    pub value: f64,
}

pub fn gap_scaling_exponent(z: u64, d: u64) -> Result<ScalingExponent, ExperimentError> {
    if z < 1 || d < 2 {
        return Err(ExperimentError::Scaling(format!("need z >= 1 and d >= 2, got z = {z}, d = {d}")));
    }
    let denominator = z
        .checked_mul(d.checked_pow(4).ok_or(ExperimentError::Scaling("d^4 overflows".into()))?)
        .and_then(|x| x.checked_add(4))
        .ok_or(ExperimentError::Scaling("z d^4 + 4 overflows".into()))?;
    Ok(ScalingExponent { denominator, value: 1.0 / denominator as f64 })
}

/// System size `N ~ eps^-(z d^4 + 4)` at which a rare region of quality
/// `eps` is expected.
pub fn expected_system_size(eps: f64, z: u64, d: u64) -> Result<f64, ExperimentError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ExperimentError::Scaling(format!("eps must lie in (0, 1), got {eps}")));
    }
    let e = gap_scaling_exponent(z, d)?;
    Ok(eps.powf(-(e.denominator as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
    fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
        (1..=m)
            .map(|i| {
                let mut x = (PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
                loop {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=m {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-15 {
                        let w = 2.0 / ((1.0 - x * x) * dp * dp);
                        return (x, w);
                    }
                }
            })
            .collect()
    }

    /// Composite 32-point Gauss-Legendre rule on 16 panels.
    fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let nodes = gauss_legendre(32);
        let panels = 16;
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * width;
                let (h, c) = (width / 2.0, lo + width / 2.0);
                nodes.iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>() * h
            })
            .sum()
    }

    /// Real symmetric 2x2: `u = M11 - M22 ~ N(0, 4)`, `v = M12 ~ N(0, 1)`,
    /// and `dist^2 = u^2 / 2 + 2 v^2`. Integrate the joint density over the
    /// ellipse in polar-like coordinates.
    fn goe2_oracle(eps: f64) -> f64 {
        integrate(
            |u| {
                let r = eps * eps - u * u / 2.0;
                if r <= 0.0 {
                    return 0.0;
                }
                let vmax = (r / 2.0).sqrt();
                let pu = (-u * u / 8.0).exp() / (8.0 * PI).sqrt();
                let pv = integrate(|v| (-v * v / 2.0).exp() / (2.0 * PI).sqrt(), -vmax, vmax);
                pu * pv
            },
            -eps * 2f64.sqrt(),
            eps * 2f64.sqrt(),
        )
    }

    /// Complex Hermitian 2x2: `dist^2 = u^2 / 2 + 2 |b|^2` with
    /// `u ~ N(0, 2)` and `Re b, Im b ~ N(0, 1/2)`; rescaled this is a
    /// standard Gaussian vector in three dimensions, so integrate the radial
    /// density.
    fn gue2_oracle(eps: f64) -> f64 {
        integrate(|r| (2.0 / PI).sqrt() * r * r * (-r * r / 2.0).exp(), 0.0, eps)
    }

    /// Ordered-eigenvalue density of 2x2 GUE integrated over
    /// `lambda_2 - lambda_1 <= eps`, in (mean, difference) coordinates.
    fn gue2_spacing_oracle(eps: f64) -> f64 {
        let z = 1.0 / (2.0 * PI);
        integrate(
            |delta| {
                integrate(
                    |m| {
                        let (l1, l2) = (m - delta / 2.0, m + delta / 2.0);
                        z * (-(l1 * l1 + l2 * l2) / 2.0).exp() * delta * delta
                    },
                    -12.0,
                    12.0,
                )
            },
            0.0,
            eps,
        )
    }

    #[test]
    fn quadrature_oracles_are_normalised() {
        assert!((goe2_oracle(30.0) - 1.0).abs() < 1e-9);
        assert!((gue2_oracle(30.0) - 1.0).abs() < 1e-9);
        assert!((gue2_spacing_oracle(30.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scalar_matrices_are_always_identity_multiples() {
        let r = mc_near_identity_exponent(1, Beta::Orthogonal, &[0.5, 0.3, 0.2, 0.1], 200, 1, 2).unwrap();
        assert!(r.estimates.iter().all(|&p| p == 1.0));
        assert_eq!(r.slope.unwrap().slope, 0.0);
    }

    #[test]
    fn near_identity_matches_oracles() {
        let grid = [0.5, 0.35, 0.25, 0.18];
        for beta in [Beta::Orthogonal, Beta::Unitary] {
            let r = mc_near_identity_exponent(2, beta, &grid, 200_000, 42, 4).unwrap();
            for (i, &eps) in grid.iter().enumerate() {
                let p = match beta {
                    Beta::Orthogonal => goe2_oracle(eps),
                    Beta::Unitary => gue2_oracle(eps),
                };
                let sigma = (p * (1.0 - p) / r.trials as f64).sqrt();
                assert!((r.estimates[i] - p).abs() <= 3.0 * sigma, "beta {beta} eps {eps}: {} vs {p}", r.estimates[i]);
            }
        }
    }

    #[test]
    fn spacing_matches_oracle_and_is_monotone() {
        let grid = [0.8, 0.5, 0.3, 0.2];
        let r = mc_spacing_exponent(2, Beta::Unitary, &grid, 100_000, 7, 4).unwrap();
        for (i, &eps) in grid.iter().enumerate() {
            let p = gue2_spacing_oracle(eps);
            let sigma = (p * (1.0 - p) / r.trials as f64).sqrt();
            assert!((r.estimates[i] - p).abs() <= 3.0 * sigma, "eps {eps}: {} vs {p}", r.estimates[i]);
        }
        assert!(r.estimates.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn stderr_halves_when_trials_quadruple() {
        let grid = [0.8, 0.6, 0.45, 0.3];
        let a = mc_spacing_exponent(4, Beta::Orthogonal, &grid, 5_000, 3, 4).unwrap();
        let b = mc_spacing_exponent(4, Beta::Orthogonal, &grid, 20_000, 3, 4).unwrap();
        for (x, y) in a.stderr.iter().zip(&b.stderr) {
            assert!((x / y - 2.0).abs() < 0.4, "{x} vs {y}");
        }
        assert!(b.slope.is_some());
    }

    #[test]
    fn independent_of_worker_count() {
        let grid = [0.5, 0.4, 0.3, 0.2];
        let a = mc_near_identity_exponent(3, Beta::Unitary, &grid, 3_000, 11, 1).unwrap();
        let b = mc_near_identity_exponent(3, Beta::Unitary, &grid, 3_000, 11, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn zero_success_points_are_dropped() {
        let r = mc_near_identity_exponent(3, Beta::Unitary, &[1.0, 0.5, 0.01, 0.001], 100, 2, 1).unwrap();
        assert!(r.dropped.contains(&0.001));
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(
            mc_near_identity_exponent(2, Beta::Unitary, &[0.3, 0.2, 0.1], 10, 1, 1),
            Err(ExperimentError::GridTooShort { .. })
        ));
        assert!(matches!(
            mc_near_identity_exponent(2, Beta::Unitary, &[0.1, 0.2, 0.3, 0.4], 10, 1, 1),
            Err(ExperimentError::GridOrder)
        ));
        assert!(mc_spacing_exponent(1, Beta::Unitary, &[0.4, 0.3, 0.2, 0.1], 10, 1, 1).is_err());
    }

    #[test]
    fn predicted_exponent_examples() {
        assert_eq!(predicted_exponents(2, Beta::Unitary), PredictedExponents { n_squared: 4, dimension_count: 3 });
        assert_eq!(predicted_exponents(2, Beta::Orthogonal), PredictedExponents { n_squared: 4, dimension_count: 2 });
        assert_eq!(predicted_exponents(1, Beta::Unitary), PredictedExponents { n_squared: 1, dimension_count: 0 });
        assert_eq!(predicted_exponents(1, Beta::Orthogonal), PredictedExponents { n_squared: 1, dimension_count: 0 });
    }

    #[test]
    fn weighted_slope_recovers_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = weighted_slope(&x, &y, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(weighted_slope(&[1.0, 1.0], &[0.0, 1.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn scaling_arithmetic() {
        let e = gap_scaling_exponent(2, 2).unwrap();
        assert_eq!(e.denominator, 36);
        assert_eq!(e.value, 1.0 / 36.0);
        assert_eq!(gap_scaling_exponent(6, 2).unwrap().denominator, 100);
        let n = expected_system_size(0.1, 2, 2).unwrap();
        assert!((n / 1e36 - 1.0).abs() < 1e-12);
        assert!(gap_scaling_exponent(0, 2).is_err());
        assert!(gap_scaling_exponent(2, 1).is_err());
        assert!(expected_system_size(1.5, 2, 2).is_err());
    }
}
