//! Random local Hamiltonians, planted rare regions and spectral certificates.

pub mod ensembles;
pub mod experiments;
pub mod hamiltonian;
pub mod matrix;
pub mod operator;
pub mod planting;
pub mod seed;
pub mod spectra;
pub mod topology;
pub mod tridiag;

use thiserror::Error;

/// Any error raised by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ensemble(#[from] ensembles::EnsembleError),
    #[error(transparent)]
    Topology(#[from] topology::TopologyError),
    #[error(transparent)]
    Hamiltonian(#[from] hamiltonian::HamiltonianError),
    #[error(transparent)]
    Spectra(#[from] spectra::SpectraError),
    #[error(transparent)]
    Plant(#[from] planting::PlantError),
    #[error(transparent)]
    Experiment(#[from] experiments::ExperimentError),
    #[error(transparent)]
    Matrix(#[from] matrix::MatrixError),
}

impl Error {
    /// True when a numerical solver failed rather than the input being invalid.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::Spectra(e) => e.is_solver_failure(),
            Error::Plant(planting::PlantError::Spectra(e)) => e.is_solver_failure(),
            Error::Matrix(matrix::MatrixError::Decomposition(_)) => true,
            _ => false,
        }
    }
}
