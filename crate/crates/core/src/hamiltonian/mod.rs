//! Two-local Hamiltonians `H = sum_<i,j> I (x) H_ij` on an interaction graph.
//!
//! Site-digit convention: a basis state of `n` sites with local dimension `d`
//! is indexed by `s = sum_k a_k d^(n-1-k)`, so site 0 is the most significant
//! d-ary digit. A term on edge `(i, j)` with `i < j` is a `d^2 x d^2` matrix
//! whose row index is `a_i d + a_j` (site `i` is the first tensor factor).
//! Every test oracle in the crate relies on this convention.

mod io;
mod operator;
mod pauli;

pub use io::{spec_from_json, spec_to_json, SpecFile};
pub use operator::{assemble_dense, embed_term, LocalOperator};
pub use pauli::{pauli, pauli_chain, PauliChainParams};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensembles::{
    sample_discrete_term_with, sample_gaussian_with, sample_projector_with, Beta, DiscreteSpectrumLaw, EnsembleError,
};
use crate::matrix::{HermitianMatrix, MatrixError};
use crate::seed::{derive_seed, rng_from_seed, stream};
use crate::topology::{Edge, InteractionGraph, TopologyError};

/// Largest Hilbert-space dimension assembled densely unless overridden.
pub const DEFAULT_DENSE_CAP: usize = 1 << 13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error("term on {edge} has dimension {found}, expected d^2 = {expected}")]
    TermDimension { edge: Edge, expected: usize, found: usize },
    #[error("no term supplied for edge {0}")]
    MissingTerm(Edge),
    #[error("term supplied for edge {0}, which is not in the graph")]
    UnexpectedTerm(Edge),
    #[error("Hilbert-space dimension {dim} exceeds the dense cap {cap}")]
    DenseCap { dim: usize, cap: usize },
    #[error("Hilbert-space dimension d^n overflows")]
    HilbertOverflow,
    #[error("vector length {found} does not match the Hilbert-space dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("site {site} out of range for {num_sites} sites")]
    SiteOutOfRange { site: usize, num_sites: usize },
    #[error("Pauli chains need local dimension 2")]
    NotQubits,
    #[error("non-finite coupling J[{alpha}][{beta}] on bond {bond}")]
    NonFiniteCoupling { alpha: usize, beta: usize, bond: usize },
    #[error("a chain of {sites} sites takes {} (open) or {} (ring) bonds, got {got}", .sites - 1, .sites)]
    BondCount { sites: usize, got: usize },
    #[error("malformed Hamiltonian file: {0}")]
    Format(String),
}

/// A `d^2 x d^2` Hermitian term attached to an edge, with its operator norm.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalTerm {
    edge: Edge,
    matrix: HermitianMatrix,
    norm: f64,
}

impl LocalTerm {
    pub fn new(edge: Edge, matrix: HermitianMatrix) -> Result<Self, HamiltonianError> {
        let norm = matrix.operator_norm()?;
        Ok(Self { edge, matrix, norm })
    }

    pub fn edge(&self) -> Edge {
        self.edge
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    /// Operator norm, recorded at construction.
    pub fn norm(&self) -> f64 {
        self.norm
    }
}

/// An interaction graph with one local term per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    graph: InteractionGraph,
    terms: Vec<LocalTerm>,
}

impl HamiltonianSpec {
    /// Pairs terms with the graph's edges; terms may come in any order but
    /// must cover every edge exactly once.
    pub fn new(graph: InteractionGraph, terms: Vec<LocalTerm>) -> Result<Self, HamiltonianError> {
        let d2 = graph.local_dim() * graph.local_dim();
        let mut slots: Vec<Option<LocalTerm>> = vec![None; graph.num_edges()];
        for term in terms {
            let idx = graph.edge_index(term.edge).ok_or(HamiltonianError::UnexpectedTerm(term.edge))?;
            if term.matrix.dim() != d2 {
                return Err(HamiltonianError::TermDimension { edge: term.edge, expected: d2, found: term.matrix.dim() });
            }
            if slots[idx].is_some() {
                return Err(HamiltonianError::Topology(TopologyError::DuplicateEdge(term.edge)));
            }
            slots[idx] = Some(term);
        }
        let terms = slots
            .into_iter()
            .zip(graph.edges())
            .map(|(slot, &e)| slot.ok_or(HamiltonianError::MissingTerm(e)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { graph, terms })
    }

    /// Every edge carries `value * I`.
    pub fn identity_multiple(graph: InteractionGraph, value: f64) -> Self {
        let d2 = graph.local_dim() * graph.local_dim();
        let terms = graph
            .edges()
            .iter()
            .map(|&e| LocalTerm { edge: e, matrix: HermitianMatrix::scaled_identity(d2, value), norm: value.abs() })
            .collect();
        Self { graph, terms }
    }

    pub fn graph(&self) -> &InteractionGraph {
        &self.graph
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    pub fn term(&self, e: Edge) -> Option<&LocalTerm> {
        self.graph.edge_index(e).map(|i| &self.terms[i])
    }

    pub fn num_sites(&self) -> usize {
        self.graph.num_sites()
    }

    pub fn local_dim(&self) -> usize {
        self.graph.local_dim()
    }

    pub fn hilbert_dim(&self) -> Result<usize, HamiltonianError> {
        self.graph.hilbert_dim().ok_or(HamiltonianError::HilbertOverflow)
    }

    /// Replaces the term on `e`.
    pub fn with_term(&self, e: Edge, matrix: HermitianMatrix) -> Result<Self, HamiltonianError> {
        let idx = self.graph.edge_index(e).ok_or(HamiltonianError::UnexpectedTerm(e))?;
        let d2 = self.local_dim() * self.local_dim();
        if matrix.dim() != d2 {
            return Err(HamiltonianError::TermDimension { edge: e, expected: d2, found: matrix.dim() });
        }
        let mut out = self.clone();
        out.terms[idx] = LocalTerm::new(e, matrix)?;
        Ok(out)
    }

    /// Triangle-inequality bound `sum_e ||H_e||` on the operator norm of `H`.
    pub fn sum_of_term_norms(&self) -> f64 {
        self.terms.iter().map(|t| t.norm).sum()
    }

    /// The operator restricted to a subset of edges (identity elsewhere).
    pub fn operator_on(&self, edges: &[Edge]) -> Result<LocalOperator, HamiltonianError> {
        let terms: Vec<&LocalTerm> =
            edges.iter().map(|&e| self.term(e).ok_or(HamiltonianError::UnexpectedTerm(e))).collect::<Result<_, _>>()?;
        LocalOperator::from_terms(self.num_sites(), self.local_dim(), terms)
    }

    /// Same graph with every term outside `keep` set to zero.
    pub fn restricted_to(&self, keep: &[Edge]) -> Self {
        let d2 = self.local_dim() * self.local_dim();
        let terms = self
            .terms
            .iter()
            .map(|t| {
                if keep.contains(&t.edge) {
                    t.clone()
                } else {
                    LocalTerm { edge: t.edge, matrix: HermitianMatrix::zeros(d2), norm: 0.0 }
                }
            })
            .collect();
        Self { graph: self.graph.clone(), terms }
    }

    pub fn operator(&self) -> Result<LocalOperator, HamiltonianError> {
        LocalOperator::new(self)
    }
}

/// Distribution of projector ranks across edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankLaw {
    Fixed(usize),
    /// Uniform over `min..=max`.
    Uniform { min: usize, max: usize },
}

/// How each local term is drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum TermModel {
    Gaussian { beta: Beta },
    Projector { ranks: RankLaw, beta: Beta },
    Discrete { law: DiscreteSpectrumLaw, beta: Beta },
}

impl TermModel {
    pub fn draw<R: Rng + ?Sized>(&self, d2: usize, rng: &mut R) -> Result<HermitianMatrix, HamiltonianError> {
        Ok(match self {
            TermModel::Gaussian { beta } => sample_gaussian_with(d2, *beta, rng),
            TermModel::Projector { ranks, beta } => {
                let rank = match *ranks {
                    RankLaw::Fixed(r) => r,
                    RankLaw::Uniform { min, max } => {
                        if min > max {
                            return Err(EnsembleError::RankOutOfRange { rank: min, dim: d2 }.into());
                        }
                        rng.random_range(min..=max)
                    }
                };
                sample_projector_with(d2, rank, *beta, rng)?
            }
            TermModel::Discrete { law, beta } => sample_discrete_term_with(d2, law, *beta, rng)?.0,
        })
    }
}

/// Seed of the term on `e`; a function of the master seed and the sorted
/// site pair only, so specs are stable under edge reordering.
pub fn edge_seed(master: u64, e: Edge) -> u64 {
    derive_seed(master, &[stream::EDGE_TERM, e.lo() as u64, e.hi() as u64])
}

/// Draws every term independently from `model`.
pub fn random_spec(graph: InteractionGraph, model: &TermModel, seed: u64) -> Result<HamiltonianSpec, HamiltonianError> {
    let d2 = graph.local_dim() * graph.local_dim();
    let terms = graph
        .edges()
        .iter()
        .map(|&e| {
            let mut rng = rng_from_seed(edge_seed(seed, e));
            LocalTerm::new(e, model.draw(d2, &mut rng)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    HamiltonianSpec::new(graph, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::hermitian_deviation;
    use crate::operator::{apply_new, dot, LinearOperator, Negated};
    use crate::seed::rng_from_seed;
    use faer::c64;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_vector(dim: usize, seed: u64) -> Vec<c64> {
        let mut rng = rng_from_seed(seed);
        (0..dim).map(|_| c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
    }

    fn gue(graph: InteractionGraph, seed: u64) -> HamiltonianSpec {
        random_spec(graph, &TermModel::Gaussian { beta: Beta::Unitary }, seed).unwrap()
    }

    /// Independent dense oracle: explicit Kronecker products with
    /// permutation of the two sites next to each other.
    fn kron_oracle(spec: &HamiltonianSpec) -> HermitianMatrix {
        let n = spec.num_sites();
        let d = spec.local_dim();
        let dim = d.pow(n as u32);
        let mut total = faer::Mat::<c64>::zeros(dim, dim);
        for term in spec.terms() {
            let (i, j) = (term.edge().lo(), term.edge().hi());
            // <s|H|t> = H[(a_i a_j),(b_i b_j)] when all other digits agree.
            for s in 0..dim {
                for t in 0..dim {
                    let digits = |x: usize| -> Vec<usize> { (0..n).map(|k| (x / d.pow((n - 1 - k) as u32)) % d).collect() };
                    let (ds, dt) = (digits(s), digits(t));
                    if (0..n).filter(|&k| k != i && k != j).all(|k| ds[k] == dt[k]) {
                        total[(s, t)] += term.matrix().get(ds[i] * d + ds[j], dt[i] * d + dt[j]);
                    }
                }
            }
        }
        HermitianMatrix::new(total).unwrap()
    }

    #[test]
    fn spec_requires_one_term_per_edge() {
        let g = InteractionGraph::chain(3, false, 2).unwrap();
        let t = LocalTerm::new(Edge::new(0, 1).unwrap(), HermitianMatrix::identity(4)).unwrap();
        assert!(matches!(HamiltonianSpec::new(g.clone(), vec![t.clone()]), Err(HamiltonianError::MissingTerm(_))));
        let bad = LocalTerm::new(Edge::new(0, 2).unwrap(), HermitianMatrix::identity(4)).unwrap();
        assert!(matches!(HamiltonianSpec::new(g.clone(), vec![t.clone(), bad]), Err(HamiltonianError::UnexpectedTerm(_))));
        let small = LocalTerm::new(Edge::new(1, 2).unwrap(), HermitianMatrix::identity(2)).unwrap();
        assert!(matches!(HamiltonianSpec::new(g, vec![t, small]), Err(HamiltonianError::TermDimension { .. })));
    }

    #[test]
    fn embed_term_examples() {
        // n = 2: the action is the raw matrix.
        let g = InteractionGraph::chain(2, false, 3).unwrap();
        let spec = gue(g, 1);
        let op = embed_term(&spec.terms()[0], 2, 3).unwrap();
        for k in 0..9 {
            let mut x = vec![c64::new(0.0, 0.0); 9];
            x[k] = c64::new(1.0, 0.0);
            let y = apply_new(&op, &x);
            for (r, yr) in y.iter().enumerate() {
                assert_eq!(*yr, spec.terms()[0].matrix().get(r, k));
            }
        }
        // Identity term.
        let t = LocalTerm::new(Edge::new(1, 3).unwrap(), HermitianMatrix::identity(4)).unwrap();
        let op = embed_term(&t, 5, 2).unwrap();
        let x = random_vector(32, 3);
        assert_eq!(apply_new(&op, &x), x);
        let far = LocalTerm::new(Edge::new(1, 7).unwrap(), HermitianMatrix::identity(4)).unwrap();
        assert!(embed_term(&far, 5, 2).is_err());
    }

    #[test]
    fn embed_term_matches_kronecker_oracle() {
        let g = InteractionGraph::from_edges(6, 2, [(2, 4)], 12).unwrap();
        let spec = gue(g, 17);
        let dense = kron_oracle(&spec);
        let op = embed_term(&spec.terms()[0], 6, 2).unwrap();
        for t in 0..20 {
            let x = random_vector(64, 100 + t);
            let got = apply_new(&op, &x);
            let want = apply_new(&dense, &x);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn dense_assembly_examples() {
        let g = InteractionGraph::chain(4, false, 2).unwrap();
        let zero = HamiltonianSpec::identity_multiple(g.clone(), 0.0);
        assert_eq!(assemble_dense(&zero, DEFAULT_DENSE_CAP).unwrap().frobenius_norm(), 0.0);
        let id = HamiltonianSpec::identity_multiple(g, 1.0);
        let h = assemble_dense(&id, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(h, HermitianMatrix::scaled_identity(16, 3.0));
        assert!(h.eigenvalues().unwrap().iter().all(|&v| (v - 3.0).abs() < 1e-12));

        let two = gue(InteractionGraph::chain(2, false, 2).unwrap(), 5);
        let h = assemble_dense(&two, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(h.eigenvalues().unwrap(), two.terms()[0].matrix().eigenvalues().unwrap());

        let big = HamiltonianSpec::identity_multiple(InteractionGraph::chain(14, false, 2).unwrap(), 1.0);
        assert!(matches!(assemble_dense(&big, DEFAULT_DENSE_CAP), Err(HamiltonianError::DenseCap { .. })));
    }

    #[test]
    fn matvec_matches_dense_and_is_linear() {
        let spec = gue(InteractionGraph::chain(6, false, 2).unwrap(), 8);
        let op = spec.operator().unwrap();
        let dense = assemble_dense(&spec, DEFAULT_DENSE_CAP).unwrap();
        let oracle = kron_oracle(&spec);
        assert!((&dense - &oracle).frobenius_norm() < 1e-12);
        assert_eq!(apply_new(&op, &vec![c64::new(0.0, 0.0); 64]), vec![c64::new(0.0, 0.0); 64]);
        let mut worst = 0.0f64;
        for t in 0..50 {
            let x = random_vector(64, t);
            let got = apply_new(&op, &x);
            let want = apply_new(&dense, &x);
            worst = got.iter().zip(&want).fold(worst, |w, (a, b)| w.max((a - b).norm()));
        }
        assert!(worst < 1e-10, "max deviation {worst}");

        let (x, y) = (random_vector(64, 1), random_vector(64, 2));
        let (a, b) = (c64::new(0.3, -1.2), c64::new(-2.0, 0.5));
        let combo: Vec<c64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = apply_new(&op, &combo);
        let (hx, hy) = (apply_new(&op, &x), apply_new(&op, &y));
        for k in 0..64 {
            assert!((lhs[k] - (a * hx[k] + b * hy[k])).norm() < 1e-10);
        }
        assert!(matches!(op.try_apply(&x[..10]), Err(HamiltonianError::DimensionMismatch { .. })));
    }

    #[test]
    fn parallel_matvec_is_bit_identical() {
        let spec = gue(InteractionGraph::chain(13, false, 2).unwrap(), 4);
        let op = spec.operator().unwrap();
        let x = random_vector(op.dim(), 9);
        let serial = op.apply_serial(&x);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let parallel = pool.install(|| apply_new(&op, &x));
        assert_eq!(serial, parallel);
    }

    #[test]
    fn dense_and_matvec_agree_for_small_systems() {
        for d in [2usize, 3] {
            let max_n = if d == 2 { 8 } else { 5 };
            for n in 2..=max_n {
                let spec = gue(InteractionGraph::chain(n, true, d).unwrap(), (n * 10 + d) as u64);
                let op = spec.operator().unwrap();
                let dense = assemble_dense(&spec, DEFAULT_DENSE_CAP).unwrap();
                assert!(hermitian_deviation(dense.as_mat()) <= 1e-10);
                let x = random_vector(op.dim(), n as u64);
                let got = apply_new(&op, &x);
                let want = apply_new(&dense, &x);
                let dev = got.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                assert!(dev < 1e-10, "d={d} n={n}: {dev}");
            }
        }
    }

    #[test]
    fn operator_norm_is_bounded_by_term_norms() {
        use crate::spectra::{lanczos_lowest, LanczosOptions};
        let spec = gue(InteractionGraph::chain(9, false, 2).unwrap(), 31);
        let op = spec.operator().unwrap();
        let opts = LanczosOptions::default();
        let low = lanczos_lowest(&op, 1, &opts).unwrap().eigenvalues[0];
        let high = -lanczos_lowest(&Negated(&op), 1, &opts).unwrap().eigenvalues[0];
        let norm = low.abs().max(high.abs());
        assert!(norm <= spec.sum_of_term_norms() + 1e-9);
    }

    #[test]
    fn random_spec_models() {
        let g = InteractionGraph::chain(4, false, 2).unwrap();
        let full = random_spec(g.clone(), &TermModel::Projector { ranks: RankLaw::Fixed(4), beta: Beta::Unitary }, 3).unwrap();
        let h = assemble_dense(&full, DEFAULT_DENSE_CAP).unwrap();
        assert!((&h - &HermitianMatrix::scaled_identity(16, 3.0)).frobenius_norm() < 1e-10);

        let law = DiscreteSpectrumLaw::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let disc = random_spec(g.clone(), &TermModel::Discrete { law, beta: Beta::Unitary }, 3).unwrap();
        for t in disc.terms() {
            for ev in t.matrix().eigenvalues().unwrap() {
                assert!(ev.abs() < 1e-10 || (ev - 1.0).abs() < 1e-10);
            }
        }

        let varying = random_spec(
            g.clone(),
            &TermModel::Projector { ranks: RankLaw::Uniform { min: 1, max: 3 }, beta: Beta::Orthogonal },
            5,
        )
        .unwrap();
        for t in varying.terms() {
            let r = t.matrix().trace().round() as usize;
            assert!((1..=3).contains(&r));
        }
    }

    #[test]
    fn edge_terms_do_not_depend_on_enumeration_order() {
        let forward = InteractionGraph::from_edges(5, 2, [(0, 1), (1, 2), (2, 3), (3, 4)], 12).unwrap();
        let backward = InteractionGraph::from_edges(5, 2, [(4, 3), (3, 2), (2, 1), (1, 0)], 12).unwrap();
        let a = gue(forward, 77);
        let b = gue(backward, 77);
        for t in a.terms() {
            assert_eq!(b.term(t.edge()).unwrap().matrix(), t.matrix());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn quadratic_form_is_real(seed in any::<u64>(), n in 2usize..7) {
            let spec = gue(InteractionGraph::chain(n, false, 2).unwrap(), seed);
            let op = spec.operator().unwrap();
            let x = random_vector(op.dim(), seed ^ 1);
            let y = random_vector(op.dim(), seed ^ 2);
            let q = dot(&x, &apply_new(&op, &x));
            prop_assert!(q.im.abs() < 1e-10 * (1.0 + q.re.abs()));
            let uv = dot(&x, &apply_new(&op, &y));
            let vu = dot(&y, &apply_new(&op, &x));
            prop_assert!((uv - vu.conj()).norm() < 1e-10 * (1.0 + uv.norm()));
        }
    }
}
