//! Schmidt decomposition of pure states across a bipartition of sites.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use super::SpectraError;
use crate::matrix::MatrixError;
use crate::topology::InteractionGraph;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    /// Descending singular values of the normalised state.
    pub values: Vec<f64>,
    /// `-sum p ln p` with `p = s^2`.
    pub entropy: f64,
}

impl SchmidtSpectrum {
    /// Number of Schmidt values above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.values.iter().filter(|&&s| s > tol).count()
    }
}

/// Schmidt values of `state` for the cut `left_sites | rest`.
///
/// The state is reshaped into a `d^|left| x d^|right|` matrix whose row index
/// lists the left sites' digits in ascending site order (and likewise for
/// columns), following the most-significant-site-first convention.
pub fn schmidt_spectrum(state: &[c64], left_sites: &[usize], graph: &InteractionGraph) -> Result<SchmidtSpectrum, SpectraError> {
    let n = graph.num_sites();
    let d = graph.local_dim();
    let dim = graph.hilbert_dim().ok_or(SpectraError::StateLength { expected: usize::MAX, found: state.len() })?;
    if state.len() != dim {
        return Err(SpectraError::StateLength { expected: dim, found: state.len() });
    }
    let mut is_left = vec![false; n];
    for &site in left_sites {
        if site >= n {
            return Err(SpectraError::SiteOutOfRange { site, num_sites: n });
        }
        is_left[site] = true;
    }
    let left: Vec<usize> = (0..n).filter(|&s| is_left[s]).collect();
    let right: Vec<usize> = (0..n).filter(|&s| !is_left[s]).collect();
    if left.is_empty() || right.is_empty() {
        return Err(SpectraError::TrivialBipartition);
    }
    let total: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if total == 0.0 {
        return Err(SpectraError::ZeroState);
    }

    let rows = d.pow(left.len() as u32);
    let cols = d.pow(right.len() as u32);
    let mut m = Mat::<c64>::zeros(rows, cols);
    for (s, amp) in state.iter().enumerate() {
        let digit = |site: usize| (s / d.pow((n - 1 - site) as u32)) % d;
        let r = left.iter().fold(0, |acc, &site| acc * d + digit(site));
        let c = right.iter().fold(0, |acc, &site| acc * d + digit(site));
        m[(r, c)] = amp / total;
    }
    let mut values = m.singular_values().map_err(|e| MatrixError::Decomposition(format!("{e:?}")))?;
    values.sort_by(|a, b| b.total_cmp(a));
    let entropy = values
        .iter()
        .map(|s| s * s)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0);
    Ok(SchmidtSpectrum { values, entropy })
}
