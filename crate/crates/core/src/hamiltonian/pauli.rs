//! Spin-1/2 chains written in the Pauli basis.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use super::{HamiltonianError, HamiltonianSpec, LocalTerm};
use crate::matrix::HermitianMatrix;
use crate::topology::{Edge, InteractionGraph};

/// `sigma^(alpha)` for `alpha` in 0..4, with `sigma^(0) = I`.
pub fn pauli(alpha: usize) -> HermitianMatrix {
    let z = c64::new(0.0, 0.0);
    let one = c64::new(1.0, 0.0);
    let i = c64::new(0.0, 1.0);
    let entries = match alpha {
        0 => [one, z, z, one],
        1 => [z, one, one, z],
        2 => [z, -i, i, z],
        3 => [one, z, z, -one],
        _ => panic!("Pauli index must be in 0..4, got {alpha}"),
    };
    HermitianMatrix::from_row_major(2, &entries).expect("Pauli matrices are Hermitian")
}

/// Couplings `J[bond][alpha][beta]` of a chain.
///
/// `num_sites - 1` bonds give an open chain; `num_sites` bonds close it into
/// a ring, the last bond joining site `num_sites - 1` to site 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliChainParams {
    pub num_sites: usize,
    pub couplings: Vec<[[f64; 4]; 4]>,
}

impl PauliChainParams {
    /// Only `J[alpha][beta] = value` on every bond of an open chain.
    pub fn single(num_sites: usize, alpha: usize, beta: usize, value: f64) -> Self {
        let mut j = [[0.0; 4]; 4];
        j[alpha][beta] = value;
        Self { num_sites, couplings: vec![j; num_sites.saturating_sub(1)] }
    }
}

fn bond_matrix(j: &[[f64; 4]; 4]) -> HermitianMatrix {
    let paulis: Vec<HermitianMatrix> = (0..4).map(pauli).collect();
    let mut acc = Mat::<c64>::zeros(4, 4);
    for (a, row) in j.iter().enumerate() {
        for (b, &coef) in row.iter().enumerate() {
            if coef != 0.0 {
                let k = paulis[a].kron(&paulis[b]);
                acc += k.as_mat() * faer::Scale(c64::new(coef, 0.0));
            }
        }
    }
    HermitianMatrix::hermitize(acc).expect("finite couplings give a finite term")
}

/// Builds `sum_j sum_{alpha,beta} J[j][alpha][beta] sigma^(alpha)_j sigma^(beta)_{j+1}`.
pub fn pauli_chain(params: &PauliChainParams) -> Result<HamiltonianSpec, HamiltonianError> {
    let n = params.num_sites;
    let bonds = params.couplings.len();
    let periodic = match bonds {
        b if n >= 2 && b + 1 == n => false,
        b if n >= 3 && b == n => true,
        got => return Err(HamiltonianError::BondCount { sites: n.max(2), got }),
    };
    for (bond, j) in params.couplings.iter().enumerate() {
        for (alpha, row) in j.iter().enumerate() {
            for (beta, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(HamiltonianError::NonFiniteCoupling { alpha, beta, bond });
                }
            }
        }
    }
    let graph = InteractionGraph::chain(n, periodic, 2)?;
    let terms = params
        .couplings
        .iter()
        .enumerate()
        .map(|(b, j)| {
            let (a, c) = (b, (b + 1) % n);
            let m = bond_matrix(j);
            // Stored terms put the lower site first.
            let m = if a < c { m } else { m.swap_factors(2)? };
            LocalTerm::new(Edge::new(a, c)?, m)
        })
        .collect::<Result<Vec<_>, _>>()?;
    HamiltonianSpec::new(graph, terms)
}
