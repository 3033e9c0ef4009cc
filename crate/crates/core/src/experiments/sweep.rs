use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pool, ExperimentError};
use crate::ensembles::Beta;
use crate::hamiltonian::{assemble_dense, random_spec, HamiltonianSpec, TermModel};
use crate::planting::{plant_continuous_region, ContinuousParams};
use crate::seed::{derive_seed, stream};
use crate::spectra::{default_tau, dense_spectrum_with_cap, gap, lanczos_lowest, LanczosOptions, SpectraError};
use crate::topology::{Edge, InteractionGraph};

/// Random instances indexed by the number of sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SweepModel {
    /// Chain with i.i.d. terms.
    Chain { d: usize, periodic: bool, terms: TermModel },
    /// Gaussian open chain with a continuous plant on its middle edge.
    PlantedChain { d: usize, s: f64, eps: f64 },
}

impl SweepModel {
    pub fn build(&self, sites: usize, seed: u64) -> Result<HamiltonianSpec, ExperimentError> {
        let err = |e: String| ExperimentError::Sweep(e);
        match self {
            SweepModel::Chain { d, periodic, terms } => {
                let g = InteractionGraph::chain(sites, *periodic, *d).map_err(|e| err(e.to_string()))?;
                random_spec(g, terms, seed).map_err(|e| err(e.to_string()))
            }
            SweepModel::PlantedChain { d, s, eps } => {
                let g = InteractionGraph::chain(sites, false, *d).map_err(|e| err(e.to_string()))?;
                let base = random_spec(g, &TermModel::Gaussian { beta: Beta::Unitary }, seed).map_err(|e| err(e.to_string()))?;
                let mid = (sites - 1) / 2;
                let edge = Edge::new(mid, mid + 1).map_err(|e| err(e.to_string()))?;
                let (spec, _) = plant_continuous_region(&base, &ContinuousParams::new(edge, *s, *eps), seed)
                    .map_err(|e| err(e.to_string()))?;
                Ok(spec)
            }
        }
    }

    /// Upper bound on the gap implied by the plant, when there is one.
    pub fn gap_bound(&self, sites: usize) -> Option<f64> {
        match self {
            SweepModel::PlantedChain { s, eps, .. } => {
                let z = if sites >= 4 { 2.0 } else { (sites - 2) as f64 };
                Some(s + 2.0 * eps * (z + 1.0))
            }
            SweepModel::Chain { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub trials: usize,
    /// Degeneracy tolerance; `None` uses the spectral-width default.
    pub tau: Option<f64>,
    pub seed: u64,
    pub workers: usize,
    /// Largest dimension solved densely; larger instances use Lanczos.
    pub dense_cap: usize,
    pub lanczos: LanczosOptions,
}

impl SweepOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { trials, tau: None, seed, workers: 1, dense_cap: 1 << 10, lanczos: LanczosOptions::default() }
    }
}

/// One `(size, trial)` outcome. `gap` is `None` when the lowest levels form
/// a single cluster or the solver failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Number of local terms.
    pub n_terms: usize,
    pub sites: usize,
    pub trial: usize,
    pub gap: Option<f64>,
    pub degeneracy: Option<usize>,
    pub converged: bool,
    pub note: Option<String>,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "N,trial,gap,degeneracy,converged";

    pub fn csv_row(&self) -> String {
        let gap = self.gap.map(|g| g.to_string()).unwrap_or_default();
        let deg = self.degeneracy.map(|g| g.to_string()).unwrap_or_default();
        format!("{},{},{},{},{}", self.n_terms, self.trial, gap, deg, self.converged)
    }
}

/// Lowest levels retained by the Lanczos path.
const LANCZOS_LEVELS: usize = 4;

fn solve(spec: &HamiltonianSpec, opts: &SweepOptions, seed: u64) -> (Option<f64>, Option<usize>, bool, Option<String>) {
    let dim = match spec.hilbert_dim() {
        Ok(d) => d,
        Err(e) => return (None, None, false, Some(e.to_string())),
    };
    let eigenvalues = if dim <= opts.dense_cap {
        match assemble_dense(spec, opts.dense_cap)
            .map_err(|e| e.to_string())
            .and_then(|h| dense_spectrum_with_cap(&h, false, opts.dense_cap).map_err(|e| e.to_string()))
        {
            Ok(s) => s.eigenvalues,
            Err(e) => return (None, None, false, Some(e)),
        }
    } else {
        let op = match spec.operator() {
            Ok(op) => op,
            Err(e) => return (None, None, false, Some(e.to_string())),
        };
        let lopts = LanczosOptions { seed, ..opts.lanczos };
        match lanczos_lowest(&op, LANCZOS_LEVELS.min(dim), &lopts) {
            Ok(s) => s.eigenvalues,
            Err(e @ SpectraError::NotConverged { .. }) => return (None, None, false, Some(e.to_string())),
            Err(e) => return (None, None, false, Some(e.to_string())),
        }
    };
    let tau = opts.tau.unwrap_or_else(|| default_tau(&eigenvalues));
    match gap(&eigenvalues, tau) {
        Ok(g) => (Some(g.gap), Some(g.ground_degeneracy), true, None),
        Err(e) => (None, Some(eigenvalues.len()), true, Some(e.to_string())),
    }
}

/// Gap of `trials` independent instances at each size. Solver failures are
/// recorded in their row and the sweep carries on.
pub fn gap_vs_size_sweep(model: &SweepModel, sizes: &[usize], opts: &SweepOptions) -> Result<Vec<SweepRow>, ExperimentError> {
    if opts.trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    if opts.workers == 0 {
        return Err(ExperimentError::NoWorkers);
    }
    if sizes.is_empty() {
        return Err(ExperimentError::Sweep("empty size grid".into()));
    }
    // Build one instance per size up front so invalid sizes fail early.
    for &n in sizes {
        model.build(n, opts.seed)?;
    }
    let jobs: Vec<(usize, usize)> = sizes.iter().flat_map(|&n| (0..opts.trials).map(move |t| (n, t))).collect();
    let pool = pool(opts.workers)?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(sites, trial)| {
                let seed = derive_seed(opts.seed, &[stream::SWEEP, sites as u64, trial as u64]);
                let spec = model.build(sites, seed)?;
                let (gap, degeneracy, converged, note) = solve(&spec, opts, seed);
                Ok(SweepRow { n_terms: spec.graph().num_edges(), sites, trial, gap, degeneracy, converged, note })
            })
            .collect()
    })
}

/// Gap quantiles over the trials of one size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n_terms: usize,
    pub sites: usize,
    pub with_gap: usize,
    pub without_gap: usize,
    pub min: Option<f64>,
    pub q25: Option<f64>,
    pub median: Option<f64>,
    pub q75: Option<f64>,
    pub max: Option<f64>,
}

impl SweepSummary {
    pub const CSV_HEADER: &'static str = "N,with_gap,without_gap,min,q25,median,q75,max";

    pub fn csv_row(&self) -> String {
        let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n_terms,
            self.with_gap,
            self.without_gap,
            f(self.min),
            f(self.q25),
            f(self.median),
            f(self.q75),
            f(self.max)
        )
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

pub fn summarize_sweep(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.sites).collect();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|sites| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.sites == sites).collect();
            let mut gaps: Vec<f64> = group.iter().filter_map(|r| r.gap).collect();
            gaps.sort_by(f64::total_cmp);
            SweepSummary {
                n_terms: group[0].n_terms,
                sites,
                with_gap: gaps.len(),
                without_gap: group.len() - gaps.len(),
                min: gaps.first().copied(),
                q25: quantile(&gaps, 0.25),
                median: quantile(&gaps, 0.5),
                q75: quantile(&gaps, 0.75),
                max: gaps.last().copied(),
            }
        })
        .collect()
}

/// Rows and summary as one CSV document.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SweepRow::CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}
