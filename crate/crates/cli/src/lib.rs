//! Reproducible experiments on random convolutional layers, emitted as CSV.

pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{Command, ExperimentConfig};
pub use error::CliError;
pub use experiments::run;
pub use table::Table;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "CONVGEOM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "convgeom",
    version,
    about = "Geometry of random convolutional layers"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON experiment description.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed (and therefore its hash).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = ExperimentConfig::from_json(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Thread cap from [`THREADS_ENV`], if set.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Validation(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
        Err(e) => Err(CliError::Validation(format!("{THREADS_ENV}: {e}"))),
    }
}

pub fn execute(args: &Args) -> Result<(), CliError> {
    let cfg = load_config(&args.config, args.seed)?;
    let csv = run(args.command, &cfg)?.render();
    match &args.out {
        Some(path) => std::fs::write(path, csv).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .lock()
            .write_all(csv.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}
