use std::process::ExitCode;

use clap::Parser;
use convgeom_cli::{execute, thread_cap, Args, CliError};

fn init_threads() -> Result<(), CliError> {
    if let Some(n) = thread_cap()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match init_threads().and_then(|()| execute(&args)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("convgeom: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
