//! Planted rare regions and their Weyl certificates.
//!
//! Every planter draws its structure (local eigenbases, identity shifts,
//! atoms) from one seed stream and its perturbations `dH` from another, so
//! replanting with `eps = 0` and the same seed yields the unperturbed
//! companion of a perturbed plant.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensembles::{sample_gaussian_with, with_haar_eigenbasis, Beta, DiscreteSpectrumLaw};
use crate::hamiltonian::{assemble_dense, HamiltonianError, HamiltonianSpec, DEFAULT_DENSE_CAP};
use crate::matrix::HermitianMatrix;
use crate::seed::{derive_seed, rng_from_seed, stream};
use crate::spectra::{dense_spectrum_with_cap, gap, SpectraError};
use crate::topology::{Edge, TopologyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error("eps must be finite and non-negative, got {0}")]
    BadEps(f64),
    #[error("splitting s must be finite and non-negative, got {0}")]
    BadSplitting(f64),
    #[error("environment gap floor must be finite and positive, got {0}")]
    BadFloor(f64),
    #[error("kernel dimension h = {h} must lie in 1..={max}")]
    BadKernel { h: usize, max: usize },
    #[error("degeneracy k = {k} must lie in 1..={max}")]
    BadDegeneracy { k: usize, max: usize },
    #[error("the law has no atom above its lowest, so k < d^2 is impossible")]
    NoExcitedAtoms,
    #[error("planted regions around {0} and {1} overlap")]
    Overlap(Edge, Edge),
    #[error("{edges} edges but {values} splittings")]
    LadderLength { edges: usize, values: usize },
    #[error("record of kind {found} cannot be checked by this certificate")]
    WrongKind { found: PlantKind },
    #[error("record does not match the spec: {0}")]
    Mismatch(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    ContinuousEdge,
    ProjectorVertex,
    DiscreteEdge,
    DosLadder,
}

impl fmt::Display for PlantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlantKind::ContinuousEdge => "continuous_edge",
            PlantKind::ProjectorVertex => "projector_vertex",
            PlantKind::DiscreteEdge => "discrete_edge",
            PlantKind::DosLadder => "dos_ladder",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Edge(Edge),
    Vertex(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Edge(e) => write!(f, "{e}"),
            Location::Vertex(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaShift {
    pub edge: Edge,
    pub beta: f64,
}

/// Everything a certificate needs to know about a plant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantRecord {
    pub kind: PlantKind,
    pub location: Location,
    pub s: f64,
    pub eps: f64,
    pub z: usize,
    /// Identity multiples placed on the overlapping terms.
    pub beta_shifts: Vec<BetaShift>,
    /// Degeneracy order `k` (discrete) or kernel dimension `h` (projector).
    pub k_or_h: Option<usize>,
    pub lambda_atoms: Option<Vec<f64>>,
    /// Lowest eigenvalue of the unperturbed planted term.
    pub local_ground: Option<f64>,
    /// `||dH||` of each perturbation, planted term first.
    pub perturbation_norms: Vec<f64>,
    pub seed: u64,
}

impl PlantRecord {
    pub fn beta_sum(&self) -> f64 {
        self.beta_shifts.iter().map(|b| b.beta).sum()
    }

    fn edge(&self) -> Result<Edge, PlantError> {
        match self.location {
            Location::Edge(e) => Ok(e),
            Location::Vertex(_) => Err(PlantError::WrongKind { found: self.kind }),
        }
    }
}

/// Parameters of a continuous (two-level) plant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousParams {
    pub edge: Edge,
    pub s: f64,
    pub eps: f64,
    /// The upper `d^2 - 2` local levels sit at least this far above the
    /// lowest one.
    pub env_gap_floor: f64,
    /// Identity shifts are uniform on this interval.
    pub beta_range: (f64, f64),
    pub beta: Beta,
}

impl ContinuousParams {
    pub fn new(edge: Edge, s: f64, eps: f64) -> Self {
        Self { edge, s, eps, env_gap_floor: 0.5, beta_range: (-1.0, 1.0), beta: Beta::Unitary }
    }
}

fn check_eps(eps: f64) -> Result<(), PlantError> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(())
    } else {
        Err(PlantError::BadEps(eps))
    }
}

/// Gaussian Hermitian matrix rescaled to operator norm `eps`.
fn perturbation<R: Rng + ?Sized>(dim: usize, eps: f64, beta: Beta, rng: &mut R) -> Result<(HermitianMatrix, f64), PlantError> {
    let g = sample_gaussian_with(dim, beta, rng);
    let n = g.operator_norm().map_err(HamiltonianError::from)?;
    let dh = g.scaled(if n > 0.0 { eps / n } else { 0.0 });
    let norm = dh.operator_norm().map_err(HamiltonianError::from)?;
    Ok((dh, norm))
}

fn plant_continuous_with(
    spec: &HamiltonianSpec,
    p: &ContinuousParams,
    seed: u64,
    kind: PlantKind,
) -> Result<(HamiltonianSpec, PlantRecord), PlantError> {
    check_eps(p.eps)?;
    if !(p.s.is_finite() && p.s >= 0.0) {
        return Err(PlantError::BadSplitting(p.s));
    }
    if !(p.env_gap_floor.is_finite() && p.env_gap_floor > 0.0) {
        return Err(PlantError::BadFloor(p.env_gap_floor));
    }
    let hood = spec.graph().edge_neighborhood(p.edge)?;
    let d2 = spec.local_dim() * spec.local_dim();
    let mut structure = rng_from_seed(derive_seed(seed, &[stream::PLANT_STRUCTURE]));
    let mut perturb = rng_from_seed(derive_seed(seed, &[stream::PLANT_PERTURB]));

    let original = spec.term(p.edge).expect("edge checked above").matrix();
    let lambda0 = original.eigenvalues().map_err(HamiltonianError::from)?[0];
    let upper = p.s.max(p.env_gap_floor);
    let mut eigs = vec![lambda0, lambda0 + p.s];
    eigs.extend((2..d2).map(|_| lambda0 + upper + structure.random::<f64>()));
    let h0 = with_haar_eigenbasis(&eigs, p.beta, &mut structure);

    let mut norms = Vec::with_capacity(hood.z() + 1);
    let (dh, n) = perturbation(d2, p.eps, p.beta, &mut perturb)?;
    norms.push(n);
    let mut out = spec.with_term(p.edge, &h0 + &dh)?;

    let mut shifts = Vec::with_capacity(hood.z());
    for &e in &hood.distance1 {
        let beta = structure.random_range(p.beta_range.0..=p.beta_range.1);
        let (dh, n) = perturbation(d2, p.eps, p.beta, &mut perturb)?;
        norms.push(n);
        out = out.with_term(e, dh.plus_identity(beta))?;
        shifts.push(BetaShift { edge: e, beta });
    }
    let record = PlantRecord {
        kind,
        location: Location::Edge(p.edge),
        s: p.s,
        eps: p.eps,
        z: hood.z(),
        beta_shifts: shifts,
        k_or_h: None,
        lambda_atoms: None,
        local_ground: Some(lambda0),
        perturbation_norms: norms,
        seed,
    };
    Ok((out, record))
}

/// Replaces the term on `edge` by `H0 + dH`, where `H0` has Haar eigenvectors
/// and its two lowest levels exactly `s` apart, and every overlapping term by
/// `beta_ij I + dH_ij`. Each `dH` has operator norm `eps`. Other terms are
/// untouched.
pub fn plant_continuous_region(
    spec: &HamiltonianSpec,
    params: &ContinuousParams,
    seed: u64,
) -> Result<(HamiltonianSpec, PlantRecord), PlantError> {
    plant_continuous_with(spec, params, seed, PlantKind::ContinuousEdge)
}

/// Plants continuous regions with splittings `s_values` on edges whose
/// closed neighbourhoods (edge plus overlapping terms) are pairwise disjoint.
pub fn plant_dos_ladder(
    spec: &HamiltonianSpec,
    edges: &[Edge],
    s_values: &[f64],
    eps: f64,
    env_gap_floor: f64,
    seed: u64,
) -> Result<(HamiltonianSpec, Vec<PlantRecord>), PlantError> {
    if edges.len() != s_values.len() {
        return Err(PlantError::LadderLength { edges: edges.len(), values: s_values.len() });
    }
    let mut regions = Vec::with_capacity(edges.len());
    for &e in edges {
        let mut hood = spec.graph().edge_neighborhood(e)?.distance1;
        hood.push(e);
        regions.push(hood);
    }
    for a in 0..edges.len() {
        for b in a + 1..edges.len() {
            if regions[a].iter().any(|x| regions[b].contains(x)) {
                return Err(PlantError::Overlap(edges[a], edges[b]));
            }
        }
    }
    let mut out = spec.clone();
    let mut records = Vec::with_capacity(edges.len());
    for (i, (&e, &s)) in edges.iter().zip(s_values).enumerate() {
        let params = ContinuousParams { env_gap_floor, ..ContinuousParams::new(e, s, eps) };
        let (next, rec) = plant_continuous_with(&out, &params, derive_seed(seed, &[i as u64]), PlantKind::DosLadder)?;
        out = next;
        records.push(rec);
    }
    Ok((out, records))
}

/// Puts `pi (x) I_r0 + dH` on every term touching `vertex`, where `pi` is the
/// diagonal projector `diag(0, ..., 0, 1, ..., 1)` with `h` zeros acting on
/// the neighbouring site.
pub fn plant_projector_region(
    spec: &HamiltonianSpec,
    vertex: usize,
    h: usize,
    eps: f64,
    seed: u64,
) -> Result<(HamiltonianSpec, PlantRecord), PlantError> {
    check_eps(eps)?;
    let d = spec.local_dim();
    if h == 0 || h >= d {
        return Err(PlantError::BadKernel { h, max: d - 1 });
    }
    let star = spec.graph().vertex_star(vertex)?;
    let mut perturb = rng_from_seed(derive_seed(seed, &[stream::PLANT_PERTURB]));
    let pi: Vec<f64> = (0..d).map(|a| if a < h { 0.0 } else { 1.0 }).collect();
    let ones = vec![1.0; d];
    let mut out = spec.clone();
    let mut norms = Vec::with_capacity(star.len());
    for &e in &star {
        // The stored term's first factor is the lower site.
        let diag: Vec<f64> = if e.lo() == vertex {
            (0..d * d).map(|k| ones[k / d] * pi[k % d]).collect()
        } else {
            (0..d * d).map(|k| pi[k / d] * ones[k % d]).collect()
        };
        let (dh, n) = perturbation(d * d, eps, Beta::Unitary, &mut perturb)?;
        norms.push(n);
        out = out.with_term(e, &HermitianMatrix::from_real_diagonal(&diag) + &dh)?;
    }
    let record = PlantRecord {
        kind: PlantKind::ProjectorVertex,
        location: Location::Vertex(vertex),
        s: 0.0,
        eps,
        z: star.len(),
        beta_shifts: Vec::new(),
        k_or_h: Some(h),
        lambda_atoms: None,
        local_ground: Some(0.0),
        perturbation_norms: norms,
        seed,
    };
    Ok((out, record))
}

/// Gives the term on `edge` a lowest eigenvalue of multiplicity exactly `k`
/// (the lowest atom of `law`; the other levels drawn from the remaining
/// atoms) with a Haar eigenbasis, and sets every overlapping term to an
/// atom of `law` times the identity.
pub fn plant_discrete_region(
    spec: &HamiltonianSpec,
    edge: Edge,
    k: usize,
    law: &DiscreteSpectrumLaw,
    beta: Beta,
    seed: u64,
) -> Result<(HamiltonianSpec, PlantRecord), PlantError> {
    let d2 = spec.local_dim() * spec.local_dim();
    if k == 0 || k > d2 {
        return Err(PlantError::BadDegeneracy { k, max: d2 });
    }
    let hood = spec.graph().edge_neighborhood(edge)?;
    let mut structure = rng_from_seed(derive_seed(seed, &[stream::PLANT_STRUCTURE]));
    let lowest = law.atoms()[0];
    let mut eigs = vec![lowest; k];
    if k < d2 {
        let excited = law.excited().ok_or(PlantError::NoExcitedAtoms)?;
        eigs.extend((k..d2).map(|_| excited.draw(&mut structure)));
    }
    eigs.sort_by(f64::total_cmp);
    let term = with_haar_eigenbasis(&eigs, beta, &mut structure);
    let mut out = spec.with_term(edge, term)?;
    let mut shifts = Vec::with_capacity(hood.z());
    for &e in &hood.distance1 {
        let atom = law.draw(&mut structure);
        out = out.with_term(e, HermitianMatrix::scaled_identity(d2, atom))?;
        shifts.push(BetaShift { edge: e, beta: atom });
    }
    let record = PlantRecord {
        kind: PlantKind::DiscreteEdge,
        location: Location::Edge(edge),
        s: 0.0,
        eps: 0.0,
        z: hood.z(),
        beta_shifts: shifts,
        k_or_h: Some(k),
        lambda_atoms: Some(law.atoms().to_vec()),
        local_ground: Some(lowest),
        perturbation_norms: vec![0.0; hood.z() + 1],
        seed,
    };
    Ok((out, record))
}

/// Adds `factor * eps * I` to every term the plant modified, producing a
/// violation of the declared perturbation size for negative controls.
pub fn inject_violation(spec: &HamiltonianSpec, record: &PlantRecord, factor: f64) -> Result<HamiltonianSpec, PlantError> {
    let shift = factor * record.eps;
    let touched: Vec<Edge> = match record.location {
        Location::Edge(e) => std::iter::once(e).chain(record.beta_shifts.iter().map(|b| b.edge)).collect(),
        Location::Vertex(v) => spec.graph().vertex_star(v)?,
    };
    let mut out = spec.clone();
    for e in touched {
        let m = out.term(e).ok_or(PlantError::Mismatch(format!("edge {e} missing")))?.matrix().plus_identity(shift);
        out = out.with_term(e, m)?;
    }
    Ok(out)
}

/// One certificate evaluation, printable as a CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub kind: PlantKind,
    pub location: Location,
    pub eps: f64,
    pub z: usize,
    /// Allowed deviation.
    pub bound: f64,
    /// Measured deviation, comparable with `bound`.
    pub observed: f64,
    pub pass: bool,
    /// Reference energy the deviation is measured from.
    pub center: f64,
    /// The low eigenvalues that were checked.
    pub lowest: Vec<f64>,
    pub detail: String,
}

impl CertificateReport {
    pub const CSV_HEADER: &'static str = "kind,location,eps,z,bound,observed,pass";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{},{},{}", self.kind, self.location, self.eps, self.z, self.bound, self.observed, self.pass)
    }
}

/// Absolute slack for floating-point error in the dense eigenvalues.
const SLACK: f64 = 1e-9;

fn lowest_eigenvalues(spec: &HamiltonianSpec, count: usize, cap: usize) -> Result<Vec<f64>, PlantError> {
    let h = assemble_dense(spec, cap)?;
    let spec = dense_spectrum_with_cap(&h, false, cap)?;
    Ok(spec.eigenvalues.into_iter().take(count).collect())
}

/// Checks the two lowest eigenvalues of a continuous plant against
/// `[center - B, center + s + B]`, with `center = lambda_E + sum beta +
/// lambda_0` and `B = eps (z + 1)`. `lambda_E` is the exact ground energy of
/// the terms at distance two or more, so the check is limited to dense sizes.
pub fn certificate_continuous(spec: &HamiltonianSpec, record: &PlantRecord, cap: usize) -> Result<CertificateReport, PlantError> {
    if !matches!(record.kind, PlantKind::ContinuousEdge | PlantKind::DosLadder) {
        return Err(PlantError::WrongKind { found: record.kind });
    }
    let edge = record.edge()?;
    let hood = spec.graph().edge_neighborhood(edge)?;
    if hood.z() != record.z {
        return Err(PlantError::Mismatch(format!("record z = {}, graph z = {}", record.z, hood.z())));
    }
    let lambda0 = record.local_ground.ok_or(PlantError::Mismatch("missing local ground energy".into()))?;
    let lambda_e = if hood.distant.is_empty() {
        0.0
    } else {
        lowest_eigenvalues(&spec.restricted_to(&hood.distant), 1, cap)?[0]
    };
    let center = lambda_e + record.beta_sum() + lambda0;
    let bound = record.eps * (record.z as f64 + 1.0);
    let lowest = lowest_eigenvalues(spec, 2, cap)?;
    let observed = lowest
        .iter()
        .map(|&l| (center - l).max(l - center - record.s).max(0.0))
        .fold(0.0, f64::max);

    // The overlapping perturbations are recomputed from the spec itself.
    let mut norms_ok = record.perturbation_norms.first().is_some_and(|&n| n <= record.eps * (1.0 + 1e-12));
    for b in &record.beta_shifts {
        let term = spec.term(b.edge).ok_or(PlantError::Mismatch(format!("edge {} missing", b.edge)))?;
        let dh = term.matrix().plus_identity(-b.beta);
        let n = dh.operator_norm().map_err(HamiltonianError::from)?;
        norms_ok &= n <= record.eps * (1.0 + 1e-12) + 1e-14;
    }
    let within = observed <= bound + SLACK;
    Ok(CertificateReport {
        kind: record.kind,
        location: record.location,
        eps: record.eps,
        z: record.z,
        bound,
        observed,
        pass: within && norms_ok,
        center,
        lowest,
        detail: if norms_ok { String::new() } else { "perturbation exceeds declared eps".into() },
    })
}

/// Checks `|lambda_k - lambda_E^(0)| <= z eps` for the `d` lowest eigenvalues,
/// where `lambda_E^(0)` is the ground energy of the unperturbed companion.
pub fn certificate_projector(
    spec: &HamiltonianSpec,
    record: &PlantRecord,
    companion: &HamiltonianSpec,
    cap: usize,
) -> Result<CertificateReport, PlantError> {
    if record.kind != PlantKind::ProjectorVertex {
        return Err(PlantError::WrongKind { found: record.kind });
    }
    if companion.graph() != spec.graph() {
        return Err(PlantError::Mismatch("companion spec has a different graph".into()));
    }
    let d = spec.local_dim();
    let center = lowest_eigenvalues(companion, 1, cap)?[0];
    let lowest = lowest_eigenvalues(spec, d, cap)?;
    let observed = lowest.iter().map(|l| (l - center).abs()).fold(0.0, f64::max);
    let bound = record.z as f64 * record.eps;
    let spread = lowest[d - 1] - lowest[0];
    let norms_ok = record.perturbation_norms.iter().all(|&n| n <= record.eps * (1.0 + 1e-12));
    Ok(CertificateReport {
        kind: record.kind,
        location: record.location,
        eps: record.eps,
        z: record.z,
        bound,
        observed,
        pass: observed <= bound + SLACK && norms_ok,
        center,
        lowest,
        detail: format!("spread {spread}"),
    })
}

/// Checks that the `k` lowest eigenvalues of a discrete plant coincide to
/// within `tau` and that the ground cluster size is a multiple of `k`.
pub fn certificate_discrete(spec: &HamiltonianSpec, record: &PlantRecord, tau: f64, cap: usize) -> Result<CertificateReport, PlantError> {
    if record.kind != PlantKind::DiscreteEdge {
        return Err(PlantError::WrongKind { found: record.kind });
    }
    let k = record.k_or_h.ok_or(PlantError::Mismatch("missing degeneracy order".into()))?;
    let eigenvalues = lowest_eigenvalues(spec, usize::MAX, cap)?;
    if k == 0 || k > eigenvalues.len() {
        return Err(PlantError::BadDegeneracy { k, max: eigenvalues.len() });
    }
    let observed = eigenvalues[k - 1] - eigenvalues[0];
    let multiplicity = eigenvalues.iter().take_while(|&&l| l - eigenvalues[0] <= tau).count();
    Ok(CertificateReport {
        kind: record.kind,
        location: record.location,
        eps: record.eps,
        z: record.z,
        bound: tau,
        observed,
        pass: observed <= tau && multiplicity % k == 0,
        center: eigenvalues[0],
        lowest: eigenvalues[..k].to_vec(),
        detail: format!("ground multiplicity {multiplicity}"),
    })
}

/// Result of checking that `lambda_0 + s_i` is close to the spectrum for
/// every rung of a ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub lambda0: f64,
    /// Distance from `lambda_0 + s_i` to the nearest eigenvalue.
    pub distances: Vec<f64>,
    pub bound: f64,
    pub pass: bool,
}

/// Each `lambda_0 + s_i` must lie within `2 sum_i eps (z_i + 1)` of an
/// eigenvalue: both the ground energy and the excited level move by at most
/// the total perturbation norm.
pub fn ladder_check(eigenvalues: &[f64], records: &[PlantRecord]) -> Result<LadderReport, PlantError> {
    let lambda0 = *eigenvalues.first().ok_or(SpectraError::Empty)?;
    let total: f64 = records.iter().map(|r| r.eps * (r.z as f64 + 1.0)).sum();
    let bound = 2.0 * total;
    let distances: Vec<f64> = records
        .iter()
        .map(|r| {
            let target = lambda0 + r.s;
            eigenvalues.iter().map(|l| (l - target).abs()).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let pass = distances.iter().all(|&x| x <= bound + SLACK);
    Ok(LadderReport { lambda0, distances, bound, pass })
}

/// Gap of the terms at distance two or more from `edge`, i.e. of the
/// environment the planted splitting competes with. `None` when the
/// environment has no distinct excited level.
pub fn environment_gap(spec: &HamiltonianSpec, edge: Edge, cap: usize) -> Result<Option<f64>, PlantError> {
    let hood = spec.graph().edge_neighborhood(edge)?;
    if hood.distant.is_empty() {
        return Ok(None);
    }
    let h = assemble_dense(&spec.restricted_to(&hood.distant), cap)?;
    let s = dense_spectrum_with_cap(&h, false, cap)?;
    Ok(gap(&s.eigenvalues, s.degeneracy_tol).ok().map(|g| g.gap))
}

/// Default cap used by certificates.
pub const CERTIFICATE_CAP: usize = DEFAULT_DENSE_CAP;
