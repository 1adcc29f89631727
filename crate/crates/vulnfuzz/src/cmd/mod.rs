//! Subcommands of the `vulnfuzz` binary.

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod compare;
mod data;
mod fuzz;
mod predict;
mod report;
mod target;
mod train;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use compare::CompareArgs;
pub use data::GenDataArgs;
pub use fuzz::FuzzArgs;
pub use predict::PredictArgs;
pub use report::ReportArgs;
pub use target::GenTargetArgs;
pub use train::TrainArgs;

use crate::manifest::{sidecar_path, Manifest};

#[derive(Debug, Parser)]
#[command(name = "vulnfuzz", version, about = "Vulnerability prediction and vulnerability-oriented fuzzing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic ACFG corpus split into train and test files.
    GenData(GenDataArgs),
    /// Train the graph embedding network and evaluate it.
    Train(TrainArgs),
    /// Predict per-function vulnerable probability and write the score dump.
    Predict(PredictArgs),
    /// Run a fuzzing campaign against a VM program.
    Fuzz(FuzzArgs),
    /// Summarize a campaign report.
    Report(ReportArgs),
    /// Compare two sets of paired campaign trials.
    Compare(CompareArgs),
    /// Generate a VM target with planted bugs and its ground truth.
    GenTarget(GenTargetArgs),
}

/// Error with its process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
    #[error("no crash found")]
    NoCrash,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
            CliError::NoCrash => 1,
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::GenData(a) => data::run(a),
        Command::Train(a) => train::run(a),
        Command::Predict(a) => predict::run(a),
        Command::Fuzz(a) => fuzz::run(a),
        Command::Report(a) => report::run(a),
        Command::Compare(a) => compare::run(a),
        Command::GenTarget(a) => target::run(a),
    }
}

pub(crate) fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub(crate) fn data_err(path: &Path) -> impl Fn(crate::formats::FormatError) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

pub(crate) fn write_bytes(path: &Path, contents: &[u8]) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Writes `contents` to `path` and the manifest to its sidecar.
pub(crate) fn write_with_manifest(path: &Path, contents: &str, manifest: &Manifest) -> CliResult {
    write_bytes(path, contents.as_bytes())?;
    write_bytes(&sidecar_path(path), manifest.clone().output(path).to_json().as_bytes())
}

pub(crate) fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not strictly between 0 and 1"))
    }
}

pub(crate) fn parse_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

pub(crate) fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a positive number"))
    }
}

pub(crate) fn parse_non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a non-negative number"))
    }
}

pub(crate) fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub(crate) fn opt_path_str(p: &Option<PathBuf>) -> Option<String> {
    p.as_deref().map(path_str)
}
