//! Command-line front end: `corrupt`, `dataset-build`, `eval` and `nmm-demo`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 unpaired
//! evaluation files, 4 numerical failure.

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use commands::{cmd_corrupt, cmd_dataset_build, cmd_eval, cmd_nmm_demo, pair_files, Pairing};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PAIRING: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "PCROBUST_THREADS";

/// A failed command with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Diverged { .. } => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult = std::result::Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "pcrobust",
    version,
    about = "Point-cloud corruption, completion metrics and feature denoising"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corrupt one cloud or every cloud under a directory.
    Corrupt(CorruptArgs),
    /// Build a corrupted dataset from train/val/test splits.
    DatasetBuild(DatasetArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Gradient-check and train the denoising module on toy data.
    NmmDemo(NmmDemoArgs),
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    /// Input cloud file (.ply/.xyz) or directory of clouds.
    #[arg(long)]
    pub input: PathBuf,
    /// Corruption kind: eoi, biw, bif, oboo, djt, tr, is, rcc or all.
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; clouds go to `<out>/<kind>/<id>.<ext>`.
    #[arg(long)]
    pub out: PathBuf,
    /// Recipe file with knob overrides and parameter pins.
    #[arg(long)]
    pub recipe: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Root containing train/, val/ and test/, each with partial/ and complete/.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub recipe: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of predicted clouds.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth clouds, same relative names as `--pred`.
    #[arg(long)]
    pub gt: PathBuf,
    /// Directory of input clouds, required for fidelity.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// F-score distance threshold.
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// CSV output path; the aligned table goes next to it with a `.txt` extension.
    #[arg(long)]
    pub report: PathBuf,
    /// Also compute fidelity (needs `--input`).
    #[arg(long)]
    pub fidelity: bool,
    /// Run name used as the report row label.
    #[arg(long, default_value = "run")]
    pub run: String,
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NmmDemoArgs {
    #[arg(long, default_value_t = 4)]
    pub b: usize,
    #[arg(long, default_value_t = 16)]
    pub l: usize,
    #[arg(long, default_value_t = 64)]
    pub d: usize,
    #[arg(long, default_value_t = 8)]
    pub heads: usize,
    /// Temperature of the negative loss.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 300)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// none, clean-only, noisy-only, no-attention or single-scale.
    #[arg(long, default_value = "none")]
    pub ablation: String,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    /// Per-step history CSV.
    #[arg(long, default_value = "nmm_history.csv")]
    pub out: PathBuf,
}

/// Runs a parsed command.
pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Corrupt(a) => cmd_corrupt(&a),
        Command::DatasetBuild(a) => cmd_dataset_build(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::NmmDemo(a) => cmd_nmm_demo(&a),
    }
}

/// Parses `std::env::args`, runs, reports errors on stderr and returns the
/// process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
