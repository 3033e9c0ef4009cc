use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gapless_core::topology::Edge;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "gapless", version, about = "Random local Hamiltonians, planted rare regions and spectral certificates")]
#[command(after_help = "Options may also come from a TOML file given with --config; flags on the command line take precedence.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gaussian ensembles and Monte Carlo exponents.
    #[command(subcommand)]
    Ensemble(EnsembleCommand),
    /// Build Hamiltonian specs.
    #[command(subcommand)]
    Ham(HamCommand),
    /// Lowest eigenvalues of a spec.
    Spectrum(SpectrumArgs),
    /// Spectral gap and ground degeneracy of a spec.
    Gap(GapArgs),
    /// Plant a rare region into a spec.
    #[command(subcommand)]
    Plant(PlantCommand),
    /// Check a planted spec against its certificate.
    Certify(CertifyArgs),
    /// Scan a spec for rare regions.
    #[command(subcommand)]
    Scan(ScanCommand),
    /// Gap statistics over system sizes.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Gap scaling exponents.
    #[command(subcommand)]
    Scaling(ScalingCommand),
}

/// Master seed: a number, or `random` to draw one and report it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedArg {
    Fixed(u64),
    Random,
}

impl FromStr for SeedArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "random" {
            return Ok(SeedArg::Random);
        }
        s.parse().map(SeedArg::Fixed).map_err(|_| format!("expected an unsigned integer or `random`, got `{s}`"))
    }
}

/// Site pair written `i,j` or `i-j`.
pub fn parse_edge(s: &str) -> Result<Edge, String> {
    let (a, b) = s.split_once([',', '-']).ok_or_else(|| format!("expected `i,j` or `i-j`, got `{s}`"))?;
    let a = a.trim().parse().map_err(|_| format!("bad site `{a}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad site `{b}`"))?;
    Edge::new(a, b).map_err(|e| e.to_string())
}

/// A coupling `J<alpha><beta>=value`, e.g. `J33=1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coupling {
    pub alpha: usize,
    pub beta: usize,
    pub value: f64,
}

impl FromStr for Coupling {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected `Jab=value` with a, b in 0..=3, got `{s}`");
        let (name, value) = s.split_once('=').ok_or_else(bad)?;
        let digits = name.strip_prefix('J').ok_or_else(bad)?.as_bytes();
        if digits.len() != 2 || !digits.iter().all(|c| (b'0'..=b'3').contains(c)) {
            return Err(bad());
        }
        let value = value.parse().map_err(|_| bad())?;
        Ok(Coupling { alpha: (digits[0] - b'0') as usize, beta: (digits[1] - b'0') as usize, value })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dense,
    Lanczos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Chain,
    Lattice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gaussian,
    Projector,
    Discrete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Gaussian,
    Projector,
    Discrete,
    Planted,
}

/// Output file; stdout when absent.
#[derive(Debug, Args)]
pub struct OutArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Solver settings shared by commands that diagonalise.
#[derive(Debug, Args, Serialize)]
pub struct SolverArgs {
    /// Largest dimension solved densely (default from GAPLESS_DENSE_CAP).
    #[arg(long)]
    pub dense_cap: Option<usize>,
    /// Lanczos residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Lanczos matrix-vector products per eigenpair.
    #[arg(long, default_value_t = 3000)]
    pub max_iter: usize,
    /// Lanczos basis size before a restart.
    #[arg(long, default_value_t = 200)]
    pub krylov_dim: usize,
}

/// Term distribution for random specs.
#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Gaussian)]
    pub model: ModelKind,
    /// 1 (real symmetric) or 2 (complex Hermitian).
    #[arg(long, default_value_t = 2)]
    pub beta: u32,
    /// Projector rank; defaults to a uniform rank in `rank_min..=rank_max`.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub rank_min: Option<usize>,
    #[arg(long)]
    pub rank_max: Option<usize>,
    /// Atoms of a discrete spectrum law, ascending.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub atoms: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub probs: Vec<f64>,
}

/// Interaction graph.
#[derive(Debug, Args, Serialize)]
pub struct GraphArgs {
    #[arg(long, value_enum, default_value_t = Topology::Chain)]
    pub topology: Topology,
    /// Number of sites of a chain.
    #[arg(long)]
    pub sites: Option<usize>,
    /// Side lengths of a lattice.
    #[arg(long, value_delimiter = ',')]
    pub sides: Vec<usize>,
    #[arg(long)]
    pub periodic: bool,
    /// Local dimension.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
}

#[derive(Debug, Subcommand)]
pub enum EnsembleCommand {
    /// Eigenvalues of Gaussian samples.
    Sample(SampleArgs),
    /// Probability of being eps-close to an identity multiple, with a log-log slope.
    McExponent(McArgs),
    /// Probability of the two lowest eigenvalues being eps-close.
    McSpacing(McArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub beta: u32,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, required = true)]
    #[serde(skip)]
    pub seed: Option<SeedArg>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub beta: u32,
    /// Strictly decreasing eps grid.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, required = true)]
    #[serde(skip)]
    pub seed: Option<SeedArg>,
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    pub workers: usize,
    /// Where to write the slope summary; stderr when absent.
    #[arg(long)]
    #[serde(skip)]
    pub slope_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum HamCommand {
    /// Independent random terms on a chain or lattice.
    Random(HamRandomArgs),
    /// Pauli couplings on a chain.
    PauliChain(PauliChainArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct HamRandomArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, required = true)]
    #[serde(skip)]
    pub seed: Option<SeedArg>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct PauliChainArgs {
    #[arg(long)]
    pub sites: usize,
    /// Adds the closing bond.
    #[arg(long)]
    pub periodic: bool,
    /// Uniform couplings `Jab=value`; all others are zero.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub only: Vec<Coupling>,
    /// JSON file with one 4x4 coupling array per bond.
    #[arg(long, conflicts_with = "only")]
    pub couplings: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// Spec JSON; stdin when absent.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Dense)]
    pub method: Method,
    /// Number of eigenvalues (all for dense when absent, 4 for Lanczos).
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Seeds the Lanczos start vectors; required with `--method lanczos`.
    #[arg(long)]
    #[serde(skip)]
    pub seed: Option<SeedArg>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct GapArgs {
    #[command(flatten)]
    pub spectrum: SpectrumArgs,
    /// Degeneracy tolerance; defaults to 1e-8 max(1, spectral width).
    #[arg(long)]
    pub tau: Option<f64>,
}

/// Base spec for a plant: a file, or a fresh Gaussian instance.
#[derive(Debug, Args, Serialize)]
pub struct BaseArgs {
    /// Base spec JSON.
    #[arg(long = "in", conflicts_with_all = ["sites", "sides"])]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Symmetry class of the generated base terms.
    #[arg(long, default_value_t = 2)]
    pub base_beta: u32,
}

/// Where a plant writes its spec and record.
#[derive(Debug, Args)]
pub struct PlantOut {
    /// Planted spec JSON; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plant record JSON; defaults to `<out>.record.json`.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PlantCommand {
    /// Two low levels `s` apart on one edge, decoupled from the rest.
    Continuous(ContinuousArgs),
    /// Projectors around a vertex with an `h`-dimensional shared kernel.
    Projector(ProjectorArgs),
    /// A `k`-fold degenerate term drawn from a discrete law.
    Discrete(DiscreteArgs),
    /// Several continuous plants on non-overlapping regions.
    DosLadder(LadderArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ContinuousArgs {
    #[command(flatten)]
    pub base: BaseArgs,
    #[arg(long, value_parser = parse_edge)]
    pub edge: Edge,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.5)]
    pub env_gap_floor: f64,
    #[arg(long, required = true)]
    #[serde(skip)]
    pub seed: Option<SeedArg>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: PlantOut,
}

#[derive(Debug, Args, Serialize)]
pub struct ProjectorArgs {
    #[command(flatten)]
    pub base: BaseArgs,
    #[arg(long)]
    pub vertex: usize,
    /// Kernel dimension, `1 <= h < d`.
    #[arg(long, default_value_t = 1)]
    pub h: usize,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, required = true)]
    #[serde(skip)]
    pub seed: Option<SeedArg>,
    /// Also write the unperturbed companion spec here.
    #[arg(long)]
    #[serde(skip)]
    pub companion_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: PlantOut,
}

#[derive(Debug, Args, Serialize)]
pub struct DiscreteArgs {
    #[command(flatten)]
    pub base: BaseArgs,
    #[arg(long, value_parser = parse_edge)]
    pub edge: Edge,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub atoms: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub probs: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub beta: u32,
    #[arg(long, required = true)]
    #[serde(skip)]
    pub seed: Option<SeedArg>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: PlantOut,
}

#[derive(Debug, Args, Serialize)]
pub struct LadderArgs {
    #[command(flatten)]
    pub base: BaseArgs,
    /// Plant edges, e.g. `1-2,4-5,7-8`.
    #[arg(long, value_delimiter = ',', value_parser = parse_edge, required = true)]
    pub edges: Vec<Edge>,
    /// One splitting per edge.
    #[arg(long = "s", value_delimiter = ',', required = true)]
    pub s_values: Vec<f64>,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.5)]
    pub env_gap_floor: f64,
    #[arg(long, required = true)]
    #[serde(skip)]
    pub seed: Option<SeedArg>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: PlantOut,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub record: PathBuf,
    /// Unperturbed companion spec, needed for projector plants.
    #[arg(long)]
    pub companion: Option<PathBuf>,
    /// Degeneracy tolerance for discrete plants.
    #[arg(long, default_value_t = 1e-10)]
    pub tau: f64,
    #[arg(long)]
    pub dense_cap: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum ScanCommand {
    /// Edges with nearly degenerate low levels and nearly trivial neighbours.
    Rare(ScanArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum SweepCommand {
    /// Gap of random instances against the number of terms.
    GapVsSize(SweepArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = SweepKind::Gaussian)]
    pub model: SweepKind,
    /// Numbers of sites.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub periodic: bool,
    #[arg(long, default_value_t = 2)]
    pub beta: u32,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub atoms: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub probs: Vec<f64>,
    /// Splitting of the planted model.
    #[arg(long, default_value_t = 0.01)]
    pub s: f64,
    /// Perturbation of the planted model.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, required = true)]
    #[serde(skip)]
    pub seed: Option<SeedArg>,
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    pub workers: usize,
    /// Per-size quantiles.
    #[arg(long)]
    #[serde(skip)]
    pub summary_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum ScalingCommand {
    /// `1/(z d^4 + 4)`, optionally with the system size expected at `eps`.
    Exponent(ScalingArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ScalingArgs {
    #[arg(long)]
    pub z: u64,
    #[arg(long)]
    pub d: u64,
    #[arg(long)]
    pub eps: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}
