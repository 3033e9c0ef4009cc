//! JSON interchange format.
//!
//! ```json
//! {"d": 2, "sites": 3, "edges": [[0, 1], [1, 2]],
//!  "terms": [[[re, im], ...], [[re, im], ...]]}
//! ```
//!
//! Each term lists its `d^2 x d^2` entries row-major. An edge written as
//! `[j, i]` with `j > i` is accepted; its term is then read with site `j` as
//! the first tensor factor and stored swapped. An optional `"_header"` object
//! carries provenance (tool version, seed, command) and is ignored on load.

use faer::c64;
use serde::{Deserialize, Serialize};

use super::{HamiltonianError, HamiltonianSpec, LocalTerm};
use crate::matrix::HermitianMatrix;
use crate::topology::{Edge, InteractionGraph, DEFAULT_DEGREE_CAP};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(rename = "_header", default, skip_serializing_if = "Option::is_none")]
    pub header: Option<serde_json::Value>,
    pub d: usize,
    pub sites: usize,
    pub edges: Vec<[usize; 2]>,
    pub terms: Vec<Vec<[f64; 2]>>,
}

impl SpecFile {
    pub fn from_spec(spec: &HamiltonianSpec, header: Option<serde_json::Value>) -> Self {
        Self {
            header,
            d: spec.local_dim(),
            sites: spec.num_sites(),
            edges: spec.terms().iter().map(|t| [t.edge().lo(), t.edge().hi()]).collect(),
            terms: spec.terms().iter().map(|t| t.matrix().to_row_major().iter().map(|z| [z.re, z.im]).collect()).collect(),
        }
    }

    pub fn into_spec(self) -> Result<HamiltonianSpec, HamiltonianError> {
        if self.edges.len() != self.terms.len() {
            return Err(HamiltonianError::Format(format!(
                "{} edges but {} terms",
                self.edges.len(),
                self.terms.len()
            )));
        }
        let graph = InteractionGraph::from_edges(self.sites, self.d, self.edges.iter().map(|e| (e[0], e[1])), DEFAULT_DEGREE_CAP)?;
        let d2 = self.d * self.d;
        let terms = self
            .edges
            .iter()
            .zip(self.terms)
            .map(|(&[a, b], entries)| {
                let edge = Edge::new(a, b)?;
                if entries.len() != d2 * d2 {
                    return Err(HamiltonianError::TermDimension {
                        edge,
                        expected: d2,
                        found: (entries.len() as f64).sqrt() as usize,
                    });
                }
                let entries: Vec<c64> = entries.iter().map(|&[re, im]| c64::new(re, im)).collect();
                let m = HermitianMatrix::from_row_major(d2, &entries)?;
                let m = if a > b { m.swap_factors(self.d)? } else { m };
                LocalTerm::new(edge, m)
            })
            .collect::<Result<Vec<_>, _>>()?;
        HamiltonianSpec::new(graph, terms)
    }
}

pub fn spec_from_json(text: &str) -> Result<HamiltonianSpec, HamiltonianError> {
    let file: SpecFile = serde_json::from_str(text).map_err(|e| HamiltonianError::Format(e.to_string()))?;
    file.into_spec()
}

pub fn spec_to_json(spec: &HamiltonianSpec, header: Option<serde_json::Value>) -> String {
    serde_json::to_string(&SpecFile::from_spec(spec, header)).expect("spec serialises")
}
