use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use gapless_core::ensembles::{sample_gaussian, Beta, DiscreteSpectrumLaw, EnsembleParams};
use gapless_core::experiments::{
    gap_scaling_exponent, expected_system_size, gap_vs_size_sweep, mc_near_identity_exponent, mc_spacing_exponent,
    rare_region_scan, summarize_sweep, sweep_csv, ScanRow, SweepModel, SweepOptions, SweepSummary,
};
use gapless_core::hamiltonian::{
    assemble_dense, pauli_chain, random_spec, spec_from_json, spec_to_json, HamiltonianSpec, PauliChainParams, RankLaw,
    TermModel, DEFAULT_DENSE_CAP,
};
use gapless_core::planting::{
    certificate_continuous, certificate_discrete, certificate_projector, ladder_check, plant_continuous_region,
    plant_discrete_region, plant_dos_ladder, plant_projector_region, CertificateReport, ContinuousParams, PlantKind,
    PlantRecord,
};
use gapless_core::seed::{derive_seed, stream};
use gapless_core::spectra::{
    default_tau, dense_spectrum_with_cap, gap, lanczos_lowest, GapReport, LanczosOptions, SpectraError, Spectrum,
};
use gapless_core::topology::InteractionGraph;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::*;
use crate::Failure;

/// Environment variable overriding the default dense cap.
pub const DENSE_CAP_ENV: &str = "GAPLESS_DENSE_CAP";

/// Sweeps switch to Lanczos above this dimension unless told otherwise.
const SWEEP_DENSE_CAP: usize = 1 << 10;

/// Run description written at the top of every output.
pub struct Header {
    command: &'static str,
    config: Value,
    seed: Option<u64>,
}

impl Header {
    fn new<T: Serialize>(command: &'static str, args: &T, seed: Option<u64>) -> Self {
        let config = serde_json::to_value(args).expect("arguments serialise");
        Self { command, config, seed }
    }

    fn comment(&self) -> String {
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into());
        format!(
            "# gapless {}\n# command: {}\n# config: {}\n# seed: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.config,
            seed
        )
    }

    fn json(&self) -> Value {
        json!({
            "tool": format!("gapless {}", env!("CARGO_PKG_VERSION")),
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
        })
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Validation(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Validation(format!("cannot write stdout: {e}"))),
    }
}

fn read_text(path: Option<&Path>) -> Result<String, Failure> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", p.display()))),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| Failure::Validation(format!("cannot read stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn read_spec(path: Option<&Path>) -> Result<HamiltonianSpec, Failure> {
    Ok(spec_from_json(&read_text(path)?)?)
}

fn resolve_seed(seed: Option<SeedArg>) -> Option<u64> {
    seed.map(|s| match s {
        SeedArg::Fixed(v) => v,
        SeedArg::Random => {
            let v = rand::random::<u64>();
            eprintln!("seed: {v}");
            v
        }
    })
}

fn required_seed(seed: Option<SeedArg>) -> Result<u64, Failure> {
    resolve_seed(seed).ok_or_else(|| Failure::Validation("--seed is required (a number or `random`)".into()))
}

fn beta(b: u32) -> Result<Beta, Failure> {
    Ok(Beta::try_from(b)?)
}

pub fn dense_cap(flag: Option<usize>, default: usize) -> Result<usize, Failure> {
    if let Some(c) = flag {
        return Ok(c);
    }
    match std::env::var(DENSE_CAP_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Validation(format!("{DENSE_CAP_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(default),
    }
}

fn lanczos_options(s: &SolverArgs, seed: u64) -> LanczosOptions {
    LanczosOptions { max_iter: s.max_iter, krylov_dim: s.krylov_dim, tol: s.tol, seed }
}

fn build_graph(g: &GraphArgs) -> Result<InteractionGraph, Failure> {
    Ok(match g.topology {
        Topology::Chain => {
            let n = g.sites.ok_or_else(|| Failure::Validation("a chain needs --sites".into()))?;
            InteractionGraph::chain(n, g.periodic, g.d)?
        }
        Topology::Lattice => {
            if g.sides.is_empty() {
                return Err(Failure::Validation("a lattice needs --sides".into()));
            }
            InteractionGraph::lattice(&g.sides, g.periodic, g.d)?
        }
    })
}

fn term_model(m: &ModelArgs, d: usize) -> Result<TermModel, Failure> {
    let beta = beta(m.beta)?;
    Ok(match m.model {
        ModelKind::Gaussian => TermModel::Gaussian { beta },
        ModelKind::Projector => {
            let ranks = match (m.rank, m.rank_min, m.rank_max) {
                (Some(r), None, None) => RankLaw::Fixed(r),
                (None, lo, hi) => RankLaw::Uniform { min: lo.unwrap_or(1), max: hi.unwrap_or(d * d - 1) },
                _ => return Err(Failure::Validation("give either --rank or --rank-min/--rank-max".into())),
            };
            TermModel::Projector { ranks, beta }
        }
        ModelKind::Discrete => TermModel::Discrete { law: DiscreteSpectrumLaw::new(m.atoms.clone(), m.probs.clone())?, beta },
    })
}

/// Dense when the dimension allows, Lanczos otherwise.
fn solve(spec: &HamiltonianSpec, a: &SpectrumArgs) -> Result<(Spectrum, Option<u64>), Failure> {
    match a.method {
        Method::Dense => {
            let cap = dense_cap(a.solver.dense_cap, DEFAULT_DENSE_CAP)?;
            let h = assemble_dense(spec, cap)?;
            let mut s = dense_spectrum_with_cap(&h, false, cap)?;
            if let Some(k) = a.k {
                if k == 0 || k > s.eigenvalues.len() {
                    return Err(SpectraError::TooManyEigenvalues { k, dim: s.eigenvalues.len() }.into());
                }
                s.eigenvalues.truncate(k);
            }
            Ok((s, resolve_seed(a.seed)))
        }
        Method::Lanczos => {
            let seed = resolve_seed(a.seed)
                .ok_or_else(|| Failure::Validation("--method lanczos needs --seed (a number or `random`)".into()))?;
            let op = spec.operator()?;
            let s = lanczos_lowest(&op, a.k.unwrap_or(4), &lanczos_options(&a.solver, seed))?;
            Ok((s, Some(seed)))
        }
    }
}

pub fn ensemble_sample(a: &SampleArgs) -> Result<(), Failure> {
    let seed = required_seed(a.seed)?;
    let header = Header::new("ensemble sample", a, Some(seed));
    let mut out = header.comment();
    out.push_str("sample,index,eigenvalue\n");
    for t in 0..a.count {
        let params = EnsembleParams::new(a.n, a.beta, derive_seed(seed, &[t as u64]))?;
        for (i, v) in sample_gaussian(&params).eigenvalues()?.iter().enumerate() {
            let _ = writeln!(out, "{t},{i},{v}");
        }
    }
    emit(a.out.out.as_deref(), &out)
}

pub fn ensemble_mc(a: &McArgs, spacing: bool) -> Result<(), Failure> {
    let seed = required_seed(a.seed)?;
    let b = beta(a.beta)?;
    let (name, result) = if spacing {
        ("ensemble mc-spacing", mc_spacing_exponent(a.n, b, &a.eps, a.trials, seed, a.workers)?)
    } else {
        ("ensemble mc-exponent", mc_near_identity_exponent(a.n, b, &a.eps, a.trials, seed, a.workers)?)
    };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let header = Header::new(name, a, Some(seed));
    emit(a.out.out.as_deref(), &format!("{}{}", header.comment(), result.to_csv()))?;
    let slope = format!("{}{}", header.comment(), result.slope_csv());
    match &a.slope_out {
        Some(p) => emit(Some(p), &slope),
        None => {
            eprint!("{}", result.slope_csv());
            Ok(())
        }
    }
}

pub fn ham_random(a: &HamRandomArgs) -> Result<(), Failure> {
    let seed = required_seed(a.seed)?;
    let graph = build_graph(&a.graph)?;
    let spec = random_spec(graph, &term_model(&a.model, a.graph.d)?, seed)?;
    let header = Header::new("ham random", a, Some(seed));
    emit(a.out.out.as_deref(), &spec_to_json(&spec, Some(header.json())))
}

pub fn ham_pauli_chain(a: &PauliChainArgs) -> Result<(), Failure> {
    let bonds = if a.periodic { a.sites } else { a.sites.saturating_sub(1) };
    let couplings = match &a.couplings {
        Some(path) => serde_json::from_str::<Vec<[[f64; 4]; 4]>>(&read_text(Some(path))?)
            .map_err(|e| Failure::Validation(format!("bad couplings file: {e}")))?,
        None => {
            if a.only.is_empty() {
                return Err(Failure::Validation("give --only Jab=value or --couplings FILE".into()));
            }
            let mut j = [[0.0; 4]; 4];
            for c in &a.only {
                j[c.alpha][c.beta] = c.value;
            }
            vec![j; bonds]
        }
    };
    let spec = pauli_chain(&PauliChainParams { num_sites: a.sites, couplings })?;
    let header = Header::new("ham pauli-chain", a, None);
    emit(a.out.out.as_deref(), &spec_to_json(&spec, Some(header.json())))
}

pub fn spectrum(a: &SpectrumArgs) -> Result<(), Failure> {
    let spec = read_spec(a.input.as_deref())?;
    let (s, seed) = solve(&spec, a)?;
    let header = Header::new("spectrum", a, seed);
    emit(a.out.out.as_deref(), &format!("{}{}", header.comment(), s.to_csv()))
}

pub fn gap_command(a: &GapArgs) -> Result<(), Failure> {
    let spec = read_spec(a.spectrum.input.as_deref())?;
    let (s, seed) = solve(&spec, &a.spectrum)?;
    let tau = a.tau.unwrap_or_else(|| default_tau(&s.eigenvalues));
    let row = match gap(&s.eigenvalues, tau) {
        Ok(r) => r.csv_row(),
        // No distinct excited level among the computed eigenvalues.
        Err(SpectraError::SingleCluster { .. }) => format!("{},,,{},{}", s.eigenvalues[0], s.eigenvalues.len(), tau),
        Err(e) => return Err(e.into()),
    };
    let header = Header::new("gap", a, seed);
    emit(a.spectrum.out.out.as_deref(), &format!("{}{}\n{}\n", header.comment(), GapReport::CSV_HEADER, row))
}

fn base_spec(b: &BaseArgs, seed: u64) -> Result<HamiltonianSpec, Failure> {
    match &b.input {
        Some(p) => read_spec(Some(p)),
        None => {
            let graph = build_graph(&b.graph)?;
            let model = TermModel::Gaussian { beta: beta(b.base_beta)? };
            Ok(random_spec(graph, &model, derive_seed(seed, &[stream::BASE_SPEC]))?)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RecordFile {
    #[serde(rename = "_header", default, skip_serializing_if = "Option::is_none")]
    header: Option<Value>,
    records: Vec<PlantRecord>,
}

fn record_path(out: &PlantOut) -> Option<PathBuf> {
    out.record.clone().or_else(|| {
        out.out.as_ref().map(|p| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            p.with_file_name(format!("{stem}.record.json"))
        })
    })
}

fn write_plant(out: &PlantOut, header: &Header, spec: &HamiltonianSpec, records: Vec<PlantRecord>) -> Result<(), Failure> {
    emit(out.out.as_deref(), &spec_to_json(spec, Some(header.json())))?;
    let file = RecordFile { header: Some(header.json()), records };
    let text = serde_json::to_string_pretty(&file).expect("records serialise") + "\n";
    match record_path(out) {
        Some(p) => emit(Some(&p), &text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

pub fn plant_continuous(a: &ContinuousArgs) -> Result<(), Failure> {
    let seed = required_seed(a.seed)?;
    let base = base_spec(&a.base, seed)?;
    let params = ContinuousParams { env_gap_floor: a.env_gap_floor, ..ContinuousParams::new(a.edge, a.s, a.eps) };
    let (spec, record) = plant_continuous_region(&base, &params, seed)?;
    write_plant(&a.out, &Header::new("plant continuous", a, Some(seed)), &spec, vec![record])
}

pub fn plant_projector(a: &ProjectorArgs) -> Result<(), Failure> {
    let seed = required_seed(a.seed)?;
    let base = base_spec(&a.base, seed)?;
    let (spec, record) = plant_projector_region(&base, a.vertex, a.h, a.eps, seed)?;
    let header = Header::new("plant projector", a, Some(seed));
    if let Some(p) = &a.companion_out {
        let (companion, _) = plant_projector_region(&base, a.vertex, a.h, 0.0, seed)?;
        emit(Some(p), &spec_to_json(&companion, Some(header.json())))?;
    }
    write_plant(&a.out, &header, &spec, vec![record])
}

pub fn plant_discrete(a: &DiscreteArgs) -> Result<(), Failure> {
    let seed = required_seed(a.seed)?;
    let base = base_spec(&a.base, seed)?;
    let law = DiscreteSpectrumLaw::new(a.atoms.clone(), a.probs.clone())?;
    let (spec, record) = plant_discrete_region(&base, a.edge, a.k, &law, beta(a.beta)?, seed)?;
    write_plant(&a.out, &Header::new("plant discrete", a, Some(seed)), &spec, vec![record])
}

pub fn plant_ladder(a: &LadderArgs) -> Result<(), Failure> {
    let seed = required_seed(a.seed)?;
    let base = base_spec(&a.base, seed)?;
    let (spec, records) = plant_dos_ladder(&base, &a.edges, &a.s_values, a.eps, a.env_gap_floor, seed)?;
    write_plant(&a.out, &Header::new("plant dos-ladder", a, Some(seed)), &spec, records)
}

pub fn certify(a: &CertifyArgs) -> Result<(), Failure> {
    let spec = read_spec(Some(&a.spec))?;
    let file: RecordFile = serde_json::from_str(&read_text(Some(&a.record))?)
        .map_err(|e| Failure::Validation(format!("bad record file: {e}")))?;
    let cap = dense_cap(a.dense_cap, DEFAULT_DENSE_CAP)?;
    let companion = a.companion.as_deref().map(|p| read_spec(Some(p))).transpose()?;
    let mut out = Header::new("certify", a, None).comment();
    out.push_str(CertificateReport::CSV_HEADER);
    out.push('\n');
    for r in &file.records {
        let report = match r.kind {
            PlantKind::ContinuousEdge | PlantKind::DosLadder => certificate_continuous(&spec, r, cap)?,
            PlantKind::DiscreteEdge => certificate_discrete(&spec, r, a.tau, cap)?,
            PlantKind::ProjectorVertex => {
                let c = companion.as_ref().ok_or_else(|| Failure::Validation("projector plants need --companion".into()))?;
                certificate_projector(&spec, r, c, cap)?
            }
        };
        out.push_str(&report.csv_row());
        out.push('\n');
    }
    let ladder: Vec<PlantRecord> = file.records.iter().filter(|r| r.kind == PlantKind::DosLadder).cloned().collect();
    if !ladder.is_empty() {
        let h = assemble_dense(&spec, cap)?;
        let eigs = dense_spectrum_with_cap(&h, false, cap)?.eigenvalues;
        let report = ladder_check(&eigs, &ladder)?;
        let eps = ladder.iter().map(|r| r.eps).fold(0.0, f64::max);
        let z: usize = ladder.iter().map(|r| r.z).sum();
        let observed = report.distances.iter().copied().fold(0.0, f64::max);
        let _ = writeln!(out, "dos_ladder,all,{eps},{z},{},{observed},{}", report.bound, report.pass);
    }
    emit(a.out.out.as_deref(), &out)
}

pub fn scan_rare(a: &ScanArgs) -> Result<(), Failure> {
    let spec = read_spec(a.input.as_deref())?;
    let rows = rare_region_scan(&spec, a.eps, a.tau)?;
    let mut out = Header::new("scan rare", a, None).comment();
    out.push_str(ScanRow::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    emit(a.out.out.as_deref(), &out)
}

pub fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let seed = required_seed(a.seed)?;
    let b = beta(a.beta)?;
    let model = match a.model {
        SweepKind::Planted => SweepModel::PlantedChain { d: a.d, s: a.s, eps: a.eps },
        kind => {
            let terms = match kind {
                SweepKind::Gaussian => TermModel::Gaussian { beta: b },
                SweepKind::Projector => TermModel::Projector {
                    ranks: a.rank.map(RankLaw::Fixed).unwrap_or(RankLaw::Uniform { min: 1, max: a.d * a.d - 1 }),
                    beta: b,
                },
                _ => TermModel::Discrete { law: DiscreteSpectrumLaw::new(a.atoms.clone(), a.probs.clone())?, beta: b },
            };
            SweepModel::Chain { d: a.d, periodic: a.periodic, terms }
        }
    };
    let opts = SweepOptions {
        trials: a.trials,
        tau: a.tau,
        seed,
        workers: a.workers,
        dense_cap: dense_cap(a.solver.dense_cap, SWEEP_DENSE_CAP)?,
        lanczos: lanczos_options(&a.solver, 0),
    };
    let rows = gap_vs_size_sweep(&model, &a.sizes, &opts)?;
    for r in rows.iter().filter(|r| !r.converged) {
        eprintln!("warning: N = {} trial {}: {}", r.n_terms, r.trial, r.note.as_deref().unwrap_or("solver failed"));
    }
    let header = Header::new("sweep gap-vs-size", a, Some(seed));
    emit(a.out.out.as_deref(), &format!("{}{}", header.comment(), sweep_csv(&rows)))?;
    if let Some(p) = &a.summary_out {
        let mut text = header.comment();
        text.push_str(SweepSummary::CSV_HEADER);
        text.push('\n');
        for s in summarize_sweep(&rows) {
            text.push_str(&s.csv_row());
            text.push('\n');
        }
        emit(Some(p), &text)?;
    }
    Ok(())
}

pub fn scaling_exponent(a: &ScalingArgs) -> Result<(), Failure> {
    let e = gap_scaling_exponent(a.z, a.d)?;
    let mut out = Header::new("scaling exponent", a, None).comment();
    match a.eps {
        Some(eps) => {
            let n = expected_system_size(eps, a.z, a.d)?;
            let _ = writeln!(out, "z,d,exponent,value,eps,expected_n\n{},{},1/{},{},{eps},{n}", a.z, a.d, e.denominator, e.value);
        }
        None => {
            let _ = writeln!(out, "z,d,exponent,value\n{},{},1/{},{}", a.z, a.d, e.denominator, e.value);
        }
    }
    emit(a.out.out.as_deref(), &out)
}
