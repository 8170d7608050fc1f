//! Command-line front end: generates channel fixtures and writes curves, equilibria,
//! protocol traces and comparison tables as CSV or JSON.

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use clap::error::ErrorKind;

use commands::{CliError, EXIT_BAD_ARGS};
use config::Cli;

/// Caps the rayon pool when the variable is set.
fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("WALRAS_MISO_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::new(EXIT_BAD_ARGS, format!("WALRAS_MISO_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::new(EXIT_BAD_ARGS, e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_BAD_ARGS as u8),
            };
        }
    };
    match configure_threads().and_then(|()| commands::run(&cli.command)) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
