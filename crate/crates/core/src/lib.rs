//! Kinetic-level machinery for the self-rotating alignment model: angular
//! quadrature, equilibria, collision invariants, hydrodynamic coefficients
//! and the linear dispersion analysis.

pub mod angular;
pub mod bvp;
pub mod coefficients;
pub mod dispersion;
pub mod error;
pub mod gci;
pub mod gvm;
pub mod vmf;

pub use error::{CoreError, Result};
