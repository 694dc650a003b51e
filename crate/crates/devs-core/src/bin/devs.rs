//! `devs` — run, validate, or cross-check a configured DEVS experiment.
//!
//! Exit codes: 0 on success, 1 on configuration or validation errors
//! (anything detectable without simulating), 2 on simulation faults and on a
//! failed flatten-check (the two runs diverged).

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use devs_core::coupled::validate_atomic_spec;
use devs_core::experiment::config::parse_config;
use devs_core::experiment::run::build_component;
use devs_core::experiment::{flatten_check, run_experiment_traced, ExperimentConfig, RunError};
use devs_core::{Component, Trace, TraceLevel};

/// Classic DEVS simulator: hierarchical models, flattening, experiments.
#[derive(Parser)]
#[command(name = "devs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment: write the CSV, print the summary.
    ///
    /// With `trace = events` or `trace = full` in the config, every recorded
    /// trace entry is mirrored to standard error as it happens (one
    /// tab-separated line each); standard output stays byte-stable.
    Run { config: PathBuf },
    /// Check the configured model's structure without simulating it.
    Validate { config: PathBuf },
    /// Run the model hierarchically and flattened, and compare behaviours.
    FlattenCheck { config: PathBuf },
}

/// A failed command: message for standard error plus the exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    /// Configuration or validation problem — exit code 1.
    fn config(message: impl fmt::Display) -> Failure {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    /// Simulation-level problem — exit code 2.
    fn fault(message: impl fmt::Display) -> Failure {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }
}

impl From<RunError> for Failure {
    fn from(error: RunError) -> Failure {
        match error {
            // Only discoverable by running the simulation.
            RunError::Fault(_) | RunError::Summary(_) => Failure::fault(error),
            // Structural problems, caught before any event executes.
            RunError::Invalid(_) | RunError::Flatten(_) | RunError::Build(_) => {
                Failure::config(error)
            }
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config '{}': {e}", path.display())))?;
    parse_config(&text).map_err(Failure::config)
}

/// Prints to standard output, tolerating a reader that stopped listening
/// (`devs run … | head`): a broken pipe suppresses the text but the command
/// still finishes and reports its exit code. Other write failures are
/// runtime faults.
fn emit(text: impl fmt::Display) -> Result<(), Failure> {
    use io::Write as _;
    match writeln!(io::stdout(), "{text}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(Failure::fault(format!("cannot write to stdout: {e}"))),
    }
}

fn run(path: &Path) -> Result<(), Failure> {
    let config = load(path)?;
    let mut trace = Trace::new(config.trace);
    if config.trace != TraceLevel::Off {
        trace = trace.with_log(Box::new(io::stderr()));
    }
    let report = run_experiment_traced(&config, trace)?;
    fs::write(&config.out_csv, &report.csv).map_err(|e| {
        Failure::config(format!("cannot write '{}': {e}", config.out_csv.display()))
    })?;
    emit(&report.summary)
}

fn validate(path: &Path) -> Result<(), Failure> {
    let config = load(path)?;
    let component = build_component(&config.model)?;
    let report = match &component {
        Component::Atomic(atomic) => validate_atomic_spec(atomic),
        Component::Coupled(coupled) => coupled.validate(),
    };
    emit(&report)?;
    if report.ok() {
        Ok(())
    } else {
        Err(Failure::config(format!(
            "{} structural violation(s)",
            report.violations().len()
        )))
    }
}

fn check(path: &Path) -> Result<(), Failure> {
    let config = load(path)?;
    let outcome = flatten_check(&config)?;
    emit(&outcome.detail)?;
    if outcome.equivalent {
        Ok(())
    } else {
        Err(Failure::fault(
            "hierarchical and flattened runs are not equivalent",
        ))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => run(config),
        Command::Validate { config } => validate(config),
        Command::FlattenCheck { config } => check(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            // Best effort: a closed stderr must not turn into a panic.
            use io::Write as _;
            let _ = writeln!(io::stderr(), "error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
