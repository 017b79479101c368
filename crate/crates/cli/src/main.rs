//! `udw-cavity`: deterministic tables for the cavity detector-response
//! comparison between radial free fall outside a Schwarzschild black hole
//! and matched uniform acceleration in flat spacetime.

mod args;
mod config;
mod output;
mod run;

use clap::Parser;
use udw_cavity::ErrorCategory;

/// Process-level error with its exit code: 2 for validation failures, 3 for
/// numerical-accuracy failures, 1 for I/O trouble.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: i32,
}

impl CliError {
    pub fn validation(message: String) -> Self {
        CliError { message, code: 2 }
    }
    pub fn accuracy(message: String) -> Self {
        CliError { message, code: 3 }
    }
    pub fn io(message: String) -> Self {
        CliError { message, code: 1 }
    }
    pub fn exit_code(&self) -> i32 {
        self.code
    }

    fn from_category(category: ErrorCategory, message: String) -> Self {
        match category {
            ErrorCategory::Validation => CliError::validation(message),
            ErrorCategory::Accuracy => CliError::accuracy(message),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<udw_cavity::kinematics::KinematicsError> for CliError {
    fn from(e: udw_cavity::kinematics::KinematicsError) -> Self {
        CliError::from_category(e.category(), e.to_string())
    }
}

impl From<udw_cavity::detector::DetectorError> for CliError {
    fn from(e: udw_cavity::detector::DetectorError) -> Self {
        CliError::from_category(e.category(), e.to_string())
    }
}

impl From<udw_cavity::experiments::ExperimentsError> for CliError {
    fn from(e: udw_cavity::experiments::ExperimentsError) -> Self {
        CliError::from_category(e.category(), e.to_string())
    }
}

impl From<udw_cavity::numerics::NumericsError> for CliError {
    fn from(e: udw_cavity::numerics::NumericsError) -> Self {
        CliError::from_category(e.category(), e.to_string())
    }
}

fn main() {
    let cli = args::Cli::parse();
    match try_run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn try_run(cli: args::Cli) -> Result<(), CliError> {
    let cfg = cli.resolve()?;

    let threads = cfg
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::validation("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::io(format!("thread pool setup failed: {e}")))?;

    let out_dir = cfg
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("UDW_CAVITY_OUT").map(Into::into))
        .unwrap_or_else(|| ".".into());

    let start = std::time::Instant::now();
    let outcome = run::execute(&cfg)?;
    let wall_time_ms = start.elapsed().as_millis();
    let written = run::write_outputs(&cfg, &outcome, &out_dir, threads, wall_time_ms)?;

    println!(
        "{}: {} rows ({} skipped) -> {} in {:.1} s",
        cfg.command.stem(),
        outcome.rows,
        outcome.skipped_rows,
        written.join(", "),
        wall_time_ms as f64 / 1e3
    );
    Ok(())
}
