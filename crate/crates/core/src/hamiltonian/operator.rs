//! Matrix-free action of a sum of two-site terms.

use faer::{c64, Mat};
use rayon::prelude::*;

use super::{HamiltonianError, HamiltonianSpec, LocalTerm};
use crate::matrix::HermitianMatrix;
use crate::operator::LinearOperator;

/// Dimension above which `apply` splits the output across rayon workers.
const PARALLEL_THRESHOLD: usize = 1 << 12;
const CHUNK: usize = 1 << 10;

/// One term, pre-digested for the gather loop.
#[derive(Clone, Debug)]
struct TermPlan {
    stride_lo: usize,
    stride_hi: usize,
    /// Non-zero entries of each row as `(column offset, value)`.
    rows: Vec<Vec<(usize, c64)>>,
}

impl TermPlan {
    fn new(term: &LocalTerm, n: usize, d: usize) -> Result<Self, HamiltonianError> {
        let e = term.edge();
        if e.hi() >= n {
            return Err(HamiltonianError::SiteOutOfRange { site: e.hi(), num_sites: n });
        }
        let stride = |site: usize| d.pow((n - 1 - site) as u32);
        let (stride_lo, stride_hi) = (stride(e.lo()), stride(e.hi()));
        let d2 = d * d;
        let m = term.matrix();
        if m.dim() != d2 {
            return Err(HamiltonianError::TermDimension { edge: e, expected: d2, found: m.dim() });
        }
        let rows = (0..d2)
            .map(|r| {
                (0..d2)
                    .filter_map(|c| {
                        let v = m.get(r, c);
                        (v != c64::new(0.0, 0.0)).then_some(((c / d) * stride_lo + (c % d) * stride_hi, v))
                    })
                    .collect()
            })
            .collect();
        Ok(Self { stride_lo, stride_hi, rows })
    }

    #[inline]
    fn locate(&self, s: usize, d: usize) -> (usize, usize) {
        let a = (s / self.stride_lo) % d;
        let b = (s / self.stride_hi) % d;
        (a * d + b, s - a * self.stride_lo - b * self.stride_hi)
    }
}

/// `sum_e I (x) H_e` acting on `(C^d)^(x n)` without forming the full matrix.
///
/// Each output component is accumulated over terms and entries in a fixed
/// order, so results are bit-identical for every thread count.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    num_sites: usize,
    local_dim: usize,
    dim: usize,
    plans: Vec<TermPlan>,
}

impl LocalOperator {
    pub fn new(spec: &HamiltonianSpec) -> Result<Self, HamiltonianError> {
        Self::from_terms(spec.num_sites(), spec.local_dim(), spec.terms().iter())
    }

    pub fn from_terms<'a>(
        num_sites: usize,
        local_dim: usize,
        terms: impl IntoIterator<Item = &'a LocalTerm>,
    ) -> Result<Self, HamiltonianError> {
        let dim = local_dim.checked_pow(num_sites as u32).ok_or(HamiltonianError::HilbertOverflow)?;
        let plans = terms.into_iter().map(|t| TermPlan::new(t, num_sites, local_dim)).collect::<Result<_, _>>()?;
        Ok(Self { num_sites, local_dim, dim, plans })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn num_terms(&self) -> usize {
        self.plans.len()
    }

    #[inline]
    fn component(&self, s: usize, x: &[c64]) -> c64 {
        let mut acc = c64::new(0.0, 0.0);
        for plan in &self.plans {
            let (r, base) = plan.locate(s, self.local_dim);
            for &(off, v) in &plan.rows[r] {
                acc += v * x[base + off];
            }
        }
        acc
    }

    /// `H x`, checking the length of `x`.
    pub fn try_apply(&self, x: &[c64]) -> Result<Vec<c64>, HamiltonianError> {
        if x.len() != self.dim {
            return Err(HamiltonianError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut y = vec![c64::new(0.0, 0.0); self.dim];
        self.apply(x, &mut y);
        Ok(y)
    }

    /// Single-threaded `H x`.
    pub fn apply_serial(&self, x: &[c64]) -> Vec<c64> {
        (0..self.dim).map(|s| self.component(s, x)).collect()
    }
}

impl LinearOperator for LocalOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[c64], y: &mut [c64]) {
        assert_eq!(x.len(), self.dim, "input length does not match the operator");
        assert_eq!(y.len(), self.dim, "output length does not match the operator");
        if self.dim >= PARALLEL_THRESHOLD {
            y.par_chunks_mut(CHUNK).enumerate().for_each(|(k, chunk)| {
                let start = k * CHUNK;
                for (i, yi) in chunk.iter_mut().enumerate() {
                    *yi = self.component(start + i, x);
                }
            });
        } else {
            for (s, yi) in y.iter_mut().enumerate() {
                *yi = self.component(s, x);
            }
        }
    }
}

/// A single term `I (x) H_ij` on `n` sites of dimension `d`.
pub fn embed_term(term: &LocalTerm, num_sites: usize, local_dim: usize) -> Result<LocalOperator, HamiltonianError> {
    LocalOperator::from_terms(num_sites, local_dim, std::iter::once(term))
}

/// Full `d^n x d^n` matrix of the Hamiltonian; refuses dimensions above `cap`.
pub fn assemble_dense(spec: &HamiltonianSpec, cap: usize) -> Result<HermitianMatrix, HamiltonianError> {
    let dim = spec.hilbert_dim()?;
    if dim > cap {
        return Err(HamiltonianError::DenseCap { dim, cap });
    }
    let op = spec.operator()?;
    let d = spec.local_dim();
    let mut mat = Mat::<c64>::zeros(dim, dim);
    for s in 0..dim {
        for plan in &op.plans {
            let (r, base) = plan.locate(s, d);
            for &(off, v) in &plan.rows[r] {
                mat[(s, base + off)] += v;
            }
        }
    }
    Ok(HermitianMatrix::new(mat)?)
}
