//! Command-line harness: configuration, the six subcommands and the
//! acceptance matrix used by `validate`.

pub mod acceptance;
pub mod commands;
pub mod config;

pub use config::Config;

use std::path::PathBuf;
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<rotalign_core::CoreError> for CliError {
    fn from(e: rotalign_core::CoreError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<rotalign_ibm::IbmError> for CliError {
    fn from(e: rotalign_ibm::IbmError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<rotalign_hydro::HydroError> for CliError {
    fn from(e: rotalign_hydro::HydroError) -> Self {
        match e {
            rotalign_hydro::HydroError::Cfl(_) | rotalign_hydro::HydroError::Param(_) => CliError::Config(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    pub serial: bool,
    pub seed: u64,
}

impl RunContext {
    /// Top-level config keys, overridden by explicit flags.
    pub fn resolve(cfg: &Config, out: Option<PathBuf>, serial: bool, seed: Option<u64>) -> Result<Self> {
        let top = cfg.section("");
        let out = out.unwrap_or_else(|| PathBuf::from(top.str("out", "out")));
        let serial = serial || matches!(top.str("serial", "false").as_str(), "true" | "1" | "yes");
        let seed = match seed {
            Some(s) => s,
            None => top.u64("seed", 20_240_601)?,
        };
        Ok(RunContext { out, serial, seed })
    }
}

/// Files written and human-readable summary lines; `ok` is false when a
/// check carried by the command failed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub ok: bool,
}

pub fn header(command: &str, ctx: &RunContext, params: &str) -> String {
    format!("# rotalign {VERSION} {command} seed={} serial={} {params}", ctx.seed, ctx.serial)
}
