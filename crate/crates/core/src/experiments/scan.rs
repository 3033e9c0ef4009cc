use serde::{Deserialize, Serialize};

use crate::ensembles::dist_to_identity_multiple;
use crate::hamiltonian::{HamiltonianError, HamiltonianSpec};
use crate::topology::Edge;

/// Local diagnostics of one edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub edge: Edge,
    /// Difference of the two lowest eigenvalues of the edge's own term.
    pub local_spacing: f64,
    /// Largest Frobenius distance of an overlapping term from the nearest
    /// identity multiple (0 when the edge has no neighbours).
    pub max_neighbor_identity_distance: f64,
    pub flagged: bool,
}

impl ScanRow {
    pub const CSV_HEADER: &'static str = "edge,local_spacing,max_neighbor_identity_distance,flagged";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.edge, self.local_spacing, self.max_neighbor_identity_distance, self.flagged)
    }
}

/// Flags edges whose term has its two lowest levels within `eps` and whose
/// overlapping terms are all within `eps` of identity multiples; `tau` is an
/// absolute slack for rounding.
///
/// The Frobenius distance bounds the operator-norm distance from above, so a
/// flagged edge meets the operator-norm condition as well.
pub fn rare_region_scan(spec: &HamiltonianSpec, eps: f64, tau: f64) -> Result<Vec<ScanRow>, HamiltonianError> {
    let distances: Vec<f64> = spec.terms().iter().map(|t| dist_to_identity_multiple(t.matrix()).dist).collect();
    let graph = spec.graph();
    spec.terms()
        .iter()
        .map(|t| {
            let eigs = t.matrix().eigenvalues()?;
            let local_spacing = eigs[1] - eigs[0];
            let hood = graph.edge_neighborhood(t.edge())?;
            let max_neighbor_identity_distance = hood
                .distance1
                .iter()
                .map(|&e| distances[graph.edge_index(e).expect("neighbour is a graph edge")])
                .fold(0.0, f64::max);
            let flagged = local_spacing <= eps + tau && max_neighbor_identity_distance <= eps + tau;
            Ok(ScanRow { edge: t.edge(), local_spacing, max_neighbor_identity_distance, flagged })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{min_spacing, Beta};
    use crate::hamiltonian::{random_spec, TermModel};
    use crate::planting::{plant_continuous_region, ContinuousParams};
    use crate::topology::InteractionGraph;

    fn gue_chain(n: usize, seed: u64) -> HamiltonianSpec {
        random_spec(InteractionGraph::chain(n, false, 2).unwrap(), &TermModel::Gaussian { beta: Beta::Unitary }, seed).unwrap()
    }

    #[test]
    fn exact_plant_is_flagged() {
        let base = gue_chain(8, 3);
        let e = Edge::new(3, 4).unwrap();
        let (spec, _) = plant_continuous_region(&base, &ContinuousParams::new(e, 0.0, 0.0), 3).unwrap();
        let rows = rare_region_scan(&spec, 1e-6, 0.0).unwrap();
        assert!(rows.iter().find(|r| r.edge == e).unwrap().flagged);
    }

    #[test]
    fn identity_spec_has_zero_diagnostics() {
        let spec = HamiltonianSpec::identity_multiple(InteractionGraph::chain(5, true, 2).unwrap(), 2.0);
        for r in rare_region_scan(&spec, 0.1, 0.0).unwrap() {
            assert_eq!(r.local_spacing, 0.0);
            assert!(r.max_neighbor_identity_distance < 1e-15);
            assert!(r.flagged);
        }
    }

    #[test]
    fn matches_brute_force_recomputation() {
        let spec = gue_chain(20, 17);
        let rows = rare_region_scan(&spec, 0.3, 0.0).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let t = &spec.terms()[i];
            let spacing = min_spacing(&t.matrix().eigenvalues().unwrap()[..2]).unwrap();
            assert_eq!(r.local_spacing, spacing);
            let mut worst = 0.0f64;
            for other in spec.terms() {
                if other.edge() != t.edge() && other.edge().shares_site(t.edge()) {
                    let m = other.matrix();
                    let a = m.trace() / 4.0;
                    let d = (m - &crate::matrix::HermitianMatrix::scaled_identity(4, a)).frobenius_norm();
                    worst = worst.max(d);
                }
            }
            assert!((r.max_neighbor_identity_distance - worst).abs() < 1e-12);
            assert_eq!(r.flagged, spacing <= 0.3 && worst <= 0.3);
        }
    }
}
