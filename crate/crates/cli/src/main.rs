mod args;
mod commands;
mod json;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

/// `FAIRPC_THREADS` caps the worker pool; unset or 0 keeps rayon's default.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FAIRPC_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("FAIRPC_THREADS must be a count, got `{raw}`")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Losses(a) => commands::losses(a),
        Command::Gap(a) => commands::gap(a),
        Command::Oracle(a) => commands::oracle(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fairpc: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
