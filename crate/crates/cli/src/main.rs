//! `gapless` command-line tool.

mod args;
mod commands;
mod config;

use clap::Parser;
use gapless_core::Error;

use args::*;

/// Exit status classes: 1 for invalid input, 2 for solver failures.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Solver(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_solver_failure() {
            Failure::Solver(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

macro_rules! via_core_error {
    ($($t:ty),*) => {
        $(impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        })*
    };
}

via_core_error!(
    gapless_core::ensembles::EnsembleError,
    gapless_core::topology::TopologyError,
    gapless_core::hamiltonian::HamiltonianError,
    gapless_core::spectra::SpectraError,
    gapless_core::planting::PlantError,
    gapless_core::experiments::ExperimentError,
    gapless_core::matrix::MatrixError
);

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Ensemble(EnsembleCommand::Sample(a)) => commands::ensemble_sample(a),
        Command::Ensemble(EnsembleCommand::McExponent(a)) => commands::ensemble_mc(a, false),
        Command::Ensemble(EnsembleCommand::McSpacing(a)) => commands::ensemble_mc(a, true),
        Command::Ham(HamCommand::Random(a)) => commands::ham_random(a),
        Command::Ham(HamCommand::PauliChain(a)) => commands::ham_pauli_chain(a),
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Gap(a) => commands::gap_command(a),
        Command::Plant(PlantCommand::Continuous(a)) => commands::plant_continuous(a),
        Command::Plant(PlantCommand::Projector(a)) => commands::plant_projector(a),
        Command::Plant(PlantCommand::Discrete(a)) => commands::plant_discrete(a),
        Command::Plant(PlantCommand::DosLadder(a)) => commands::plant_ladder(a),
        Command::Certify(a) => commands::certify(a),
        Command::Scan(ScanCommand::Rare(a)) => commands::scan_rare(a),
        Command::Sweep(SweepCommand::GapVsSize(a)) => commands::sweep(a),
        Command::Scaling(ScalingCommand::Exponent(a)) => commands::scaling_exponent(a),
    }
}

fn run(argv: Vec<String>) -> i32 {
    let argv = match config::merge(argv) {
        Ok((argv, _)) => argv,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn main() {
    std::process::exit(run(std::env::args().collect()));
}
