//! Finite-volume solvers on periodic 1D/2D meshes for the self-rotating
//! hydrodynamic systems: small angular velocities (density, angular momentum,
//! direction), large angular velocities (W-resolved densities, direction) and
//! the small-ζ reduction of the latter.
//!
//! Directions are stored as angles, so |Ω| = 1 holds by construction.

pub mod eigen;
pub mod large;
pub mod mesh;
pub mod small;
pub mod waves;

pub use eigen::{soh_eigenvalues, soh_linearized_speeds};
pub use large::{step_sohr_l, HydroStateL};
pub use mesh::Mesh;
pub use small::{step_reduced, step_soh, step_sohr_s, HydroStateS, ReducedCoeffs, SmallParams};

use thiserror::Error;

/// Largest accepted dt·speed·Σ(1/h) over the active axes.
pub const CFL_LIMIT: f64 = 0.45;

/// Cells below this fraction of the mean density keep their direction.
pub const VACUUM_FRACTION: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum HydroError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("CFL violated: {0}")]
    Cfl(String),
    #[error("vacuum: {0}")]
    Vacuum(String),
    #[error("positivity: {0}")]
    Positivity(String),
    #[error(transparent)]
    Core(#[from] rotalign_core::CoreError),
}

pub type Result<T> = std::result::Result<T, HydroError>;

/// Numerical knobs shared by all steppers.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepOptions {
    /// Dissipation speed of the Rusanov fluxes; defaults to the model's own
    /// wave-speed bound. Setting it lets two models share identical
    /// dissipation.
    pub viscosity_speed: Option<f64>,
    pub serial: bool,
}
