//! Interaction graphs: which pairs of sites carry a local term.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default bound on the vertex degree of user-supplied graphs.
pub const DEFAULT_DEGREE_CAP: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("need at least {min} sites, got {got}")]
    TooFewSites { min: usize, got: usize },
    #[error("local dimension must be at least 2, got {0}")]
    LocalDim(usize),
    #[error("self-loop on site {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}")]
    DuplicateEdge(Edge),
    #[error("site {site} out of range for {num_sites} sites")]
    SiteOutOfRange { site: usize, num_sites: usize },
    #[error("edge {0} is not in the graph")]
    MissingEdge(Edge),
    #[error("vertex degree {degree} exceeds the cap {cap}")]
    DegreeCap { degree: usize, cap: usize },
    #[error("lattice needs at least one axis and every side >= 2")]
    BadLattice,
}

/// Unordered pair of distinct sites, stored with the smaller index first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Result<Self, TopologyError> {
        if a == b {
            return Err(TopologyError::SelfLoop(a));
        }
        Ok(Self { lo: a.min(b), hi: a.max(b) })
    }

    #[inline]
    pub fn lo(self) -> usize {
        self.lo
    }

    #[inline]
    pub fn hi(self) -> usize {
        self.hi
    }

    pub fn touches(self, site: usize) -> bool {
        self.lo == site || self.hi == site
    }

    pub fn shares_site(self, other: Edge) -> bool {
        self.touches(other.lo) || self.touches(other.hi)
    }

    /// The endpoint that is not `site`, if `site` is an endpoint.
    pub fn other(self, site: usize) -> Option<usize> {
        if self.lo == site {
            Some(self.hi)
        } else if self.hi == site {
            Some(self.lo)
        } else {
            None
        }
    }
}

impl TryFrom<[usize; 2]> for Edge {
    type Error = TopologyError;
    fn try_from(pair: [usize; 2]) -> Result<Self, Self::Error> {
        Edge::new(pair[0], pair[1])
    }
}

impl From<Edge> for [usize; 2] {
    fn from(e: Edge) -> Self {
        [e.lo, e.hi]
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

/// Sites with a uniform local dimension and a list of interacting pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    num_sites: usize,
    local_dim: usize,
    edges: Vec<Edge>,
    degrees: Vec<usize>,
    max_degree: usize,
}

/// Edges at distance one from a given edge (sharing a site) and the rest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeNeighborhood {
    pub distance1: Vec<Edge>,
    pub distant: Vec<Edge>,
}

impl EdgeNeighborhood {
    /// Number of overlapping terms.
    pub fn z(&self) -> usize {
        self.distance1.len()
    }
}

impl InteractionGraph {
    fn build(num_sites: usize, local_dim: usize, edges: Vec<Edge>) -> Result<Self, TopologyError> {
        if local_dim < 2 {
            return Err(TopologyError::LocalDim(local_dim));
        }
        if num_sites == 0 {
            return Err(TopologyError::TooFewSites { min: 1, got: 0 });
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut degrees = vec![0; num_sites];
        for &e in &edges {
            if e.hi >= num_sites {
                return Err(TopologyError::SiteOutOfRange { site: e.hi, num_sites });
            }
            if !seen.insert(e) {
                return Err(TopologyError::DuplicateEdge(e));
            }
            degrees[e.lo] += 1;
            degrees[e.hi] += 1;
        }
        let max_degree = degrees.iter().copied().max().unwrap_or(0);
        Ok(Self { num_sites, local_dim, edges, degrees, max_degree })
    }

    /// Open chain `0-1-...-(n-1)`, or a ring when `periodic`.
    ///
    /// A two-site ring has the single edge `0-1`.
    pub fn chain(num_sites: usize, periodic: bool, local_dim: usize) -> Result<Self, TopologyError> {
        if num_sites < 2 {
            return Err(TopologyError::TooFewSites { min: 2, got: num_sites });
        }
        let mut edges: Vec<Edge> = (0..num_sites - 1).map(|i| Edge { lo: i, hi: i + 1 }).collect();
        if periodic && num_sites > 2 {
            edges.push(Edge { lo: 0, hi: num_sites - 1 });
        }
        Self::build(num_sites, local_dim, edges)
    }

    /// Hyper-rectangular nearest-neighbour lattice with side lengths `sides`.
    ///
    /// Sites are numbered row-major (last axis fastest). Wrap-around edges
    /// that would duplicate an existing edge (side 2) are dropped.
    pub fn lattice(sides: &[usize], periodic: bool, local_dim: usize) -> Result<Self, TopologyError> {
        if sides.is_empty() || sides.iter().any(|&l| l < 2) {
            return Err(TopologyError::BadLattice);
        }
        let num_sites: usize = sides.iter().product();
        let mut strides = vec![1usize; sides.len()];
        for k in (0..sides.len() - 1).rev() {
            strides[k] = strides[k + 1] * sides[k + 1];
        }
        let mut edges = Vec::new();
        let mut seen = HashSet::new();
        for site in 0..num_sites {
            for (&side, &stride) in sides.iter().zip(&strides) {
                let coord = (site / stride) % side;
                let neighbour = if coord + 1 < side {
                    Some(site + stride)
                } else if periodic {
                    Some(site - coord * stride)
                } else {
                    None
                };
                if let Some(nb) = neighbour {
                    let e = Edge::new(site, nb)?;
                    if seen.insert(e) {
                        edges.push(e);
                    }
                }
            }
        }
        Self::build(num_sites, local_dim, edges)
    }

    /// `dimension`-dimensional square lattice of side `side`.
    pub fn square_lattice(dimension: usize, side: usize, periodic: bool, local_dim: usize) -> Result<Self, TopologyError> {
        if dimension == 0 {
            return Err(TopologyError::BadLattice);
        }
        Self::lattice(&vec![side; dimension], periodic, local_dim)
    }

    /// Arbitrary graph from an edge list, rejecting degrees above `degree_cap`.
    pub fn from_edges(
        num_sites: usize,
        local_dim: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
        degree_cap: usize,
    ) -> Result<Self, TopologyError> {
        let edges = pairs.into_iter().map(|(a, b)| Edge::new(a, b)).collect::<Result<Vec<_>, _>>()?;
        let g = Self::build(num_sites, local_dim, edges)?;
        if g.max_degree > degree_cap {
            return Err(TopologyError::DegreeCap { degree: g.max_degree, cap: degree_cap });
        }
        Ok(g)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Number of local terms `N`.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn degree(&self, site: usize) -> Result<usize, TopologyError> {
        self.degrees
            .get(site)
            .copied()
            .ok_or(TopologyError::SiteOutOfRange { site, num_sites: self.num_sites })
    }

    pub fn edge_index(&self, e: Edge) -> Option<usize> {
        self.edges.iter().position(|&x| x == e)
    }

    /// `d^n`, or `None` on overflow.
    pub fn hilbert_dim(&self) -> Option<usize> {
        self.local_dim.checked_pow(u32::try_from(self.num_sites).ok()?)
    }

    /// Splits the other edges into those sharing a site with `e` and the rest.
    pub fn edge_neighborhood(&self, e: Edge) -> Result<EdgeNeighborhood, TopologyError> {
        if self.edge_index(e).is_none() {
            return Err(TopologyError::MissingEdge(e));
        }
        let (distance1, distant) = self.edges.iter().filter(|&&x| x != e).partition(|x| x.shares_site(e));
        Ok(EdgeNeighborhood { distance1, distant })
    }

    /// All edges incident on `site`.
    pub fn vertex_star(&self, site: usize) -> Result<Vec<Edge>, TopologyError> {
        if site >= self.num_sites {
            return Err(TopologyError::SiteOutOfRange { site, num_sites: self.num_sites });
        }
        Ok(self.edges.iter().copied().filter(|e| e.touches(site)).collect())
    }
}
