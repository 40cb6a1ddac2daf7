//! Command-line front end: `analyze`, `verify`, `certify`, `ball` and `selfcheck`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use commands::{execute, Outcome, Report};
pub use config::{Cli, Format, RunConfig};
pub use error::{
    CliError, EXIT_CHECKS_FAILED, EXIT_OK, EXIT_REFUSED, EXIT_RUNTIME, EXIT_USAGE, EXIT_VIOLATED,
};

/// Caps the global rayon pool from `WARPISO_THREADS`.
fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("WARPISO_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "WARPISO_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    // A pool that already exists (repeated calls in one process) is kept.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Executes a configuration and writes its report; returns the exit status.
pub fn run_config(config: &RunConfig) -> Result<i32, CliError> {
    let outcome = execute(config)?;
    let bytes = output::render(&outcome, config.format)?;
    match &config.output {
        Some(path) => {
            std::fs::write(path, bytes)?;
            let mut err = std::io::stderr().lock();
            for d in outcome.diagnostics() {
                let _ = writeln!(err, "warpiso: {d}");
            }
        }
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(outcome.exit_code())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = configure_threads()
        .and_then(|_| RunConfig::from_command(&cli.command))
        .and_then(|config| run_config(&config));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("warpiso: error: {e}");
            e.exit_code()
        }
    }
}
