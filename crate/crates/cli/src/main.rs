use clap::{Args, Parser, Subcommand};
use rotalign::commands::{cmd_coeffs, cmd_dispersion, cmd_hydro, cmd_ibm, cmd_profiles, cmd_validate};
use rotalign::{CliError, Config, Outcome, RunContext};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rotalign", version, about = "Alignment with self-rotation: coefficients, particles, hydrodynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file with [section] headers
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run on one thread
    #[arg(long, global = true)]
    serial: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a config value, as section.key=value
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficient tables a1..a6(W) per noise level
    Coeffs,
    /// Equilibrium and collision-invariant profiles
    Profiles,
    /// Particle simulation
    Ibm,
    /// Hydrodynamic solvers
    Hydro,
    /// Linear stability scan
    Dispersion,
    /// Acceptance matrix
    Validate {
        /// Criteria to run, by tag or number
        #[arg(long, value_delimiter = ',')]
        tags: Vec<String>,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    for o in &cli.common.overrides {
        cfg.set_override(o)?;
    }
    let ctx = RunContext::resolve(&cfg, cli.common.out.clone(), cli.common.serial, cli.common.seed)?;
    if ctx.serial {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    match &cli.command {
        Command::Coeffs => cmd_coeffs(&cfg, &ctx),
        Command::Profiles => cmd_profiles(&cfg, &ctx),
        Command::Ibm => cmd_ibm(&cfg, &ctx),
        Command::Hydro => cmd_hydro(&cfg, &ctx),
        Command::Dispersion => cmd_dispersion(&cfg, &ctx),
        Command::Validate { tags } => cmd_validate(&cfg, &ctx, tags),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            for l in &out.lines {
                println!("{l}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
