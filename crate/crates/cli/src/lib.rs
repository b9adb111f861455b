//! Scenario parsing, command runners and report output for the `lrlattice`
//! command-line tool.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod output;
pub mod scenario;

use std::path::PathBuf;

use clap::Parser;

pub use commands::run;
pub use output::{write_atomic, Report};
pub use scenario::{parse_scenario, Command, OutputFormat, RawScenario, Scenario};

/// Exit code of a run whose reports were written and every check passed.
pub const EXIT_OK: i32 = 0;
/// Exit code when a checked inequality failed; the report is still written.
pub const EXIT_VIOLATION: i32 = 1;
/// Exit code for configuration or runtime errors; nothing is written.
pub const EXIT_ERROR: i32 = 2;

/// Harmonic lattice scans and verifications.
#[derive(Debug, Parser)]
#[command(name = "lrlattice", version)]
pub struct Cli {
    /// Command to run; overrides `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// JSON scenario file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: RawScenario,
}

/// Parses, runs and writes; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let mut overrides = cli.overrides;
    overrides.command = cli.command;
    let scenario = match parse_scenario(overrides, cli.config.as_deref()) {
        Ok(s) => s,
        Err(errors) => {
            for e in errors {
                eprintln!("error: {e}");
            }
            return EXIT_ERROR;
        }
    };
    let report = match run(&scenario) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let text = report.render(scenario.format);
    match &scenario.output {
        Some(path) => {
            if let Err(e) = write_atomic(path, &text) {
                eprintln!("error: cannot write `{}`: {e}", path.display());
                return EXIT_ERROR;
            }
        }
        None => print!("{text}"),
    }
    for v in &report.violations {
        eprintln!("violation: {v}");
    }
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

/// Applies `LRLATTICE_THREADS` to the rayon pool and the dense solver.
pub fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("LRLATTICE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("LRLATTICE_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())?;
    lrlattice_oracle::set_threads(threads);
    Ok(())
}
