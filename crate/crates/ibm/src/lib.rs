//! Stochastic particle simulator for self-propelled particles with intrinsic
//! angular velocity and local alignment.

pub mod checkpoint;
pub mod equilibrium;
pub mod neighbors;
pub mod observables;
pub mod psi;
pub mod sampling;
pub mod system;

pub use neighbors::{neighbor_flux, neighbor_flux_brute, NeighborIndex};
pub use observables::{observables, Observables};
pub use psi::PsiTable;
pub use system::{IbmParams, Law, ParticleSystem};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IbmError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("stability guard: {0}")]
    Guard(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Core(#[from] rotalign_core::CoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IbmError>;
