//! `mz-lab`: command-line front end for `mz-core`.
//!
//! Every command that writes to `--out DIR` also writes `DIR/manifest.json`,
//! from which `mz-lab rerun` regenerates byte-identical CSV files.

pub mod args;
pub mod commands;
pub mod error;
pub mod grid;
pub mod manifest;

use std::ffi::OsString;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};

/// Environment variable capping the worker threads used by sweeps and
/// multi-seed runs.
pub const THREADS_ENV: &str = "MZ_LAB_THREADS";

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match configure_threads().and_then(|()| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mz-lab: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Analyze(a) => commands::analyze::run(&a),
        Command::Sweep(a) => commands::sweep::run(&a),
        Command::Simulate(a) => commands::simulate::run(&a),
        Command::Monitor(a) => commands::monitor::run(&a),
        Command::PayoffTable(a) => commands::payoff::run(&a),
        Command::Rerun(a) => commands::rerun::run(&a),
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => {
            return Err(CliError::Validation(format!(
                "{THREADS_ENV} must be a positive integer, got `{raw}`"
            )))
        }
    };
    // The global pool can only be built once per process; later calls keep it.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}
