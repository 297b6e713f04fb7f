//! `mspl`: fit, select, simulate and check penalised factor models.
//!
//! Exit codes: 0 success, 1 a penalty failed an existence probe, 2 invalid
//! input or arguments, 3 the fit was flagged as a Heywood case (output is
//! still written).

mod commands;
mod config;
mod error;
mod input;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "mspl",
    version,
    about = "Penalised maximum likelihood factor analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a q-factor model.
    Fit(FitArgs),
    /// Fit a grid of q and pick the AIC and BIC minimisers.
    Select(SelectArgs),
    /// Run a seeded Monte Carlo study on a loading design.
    Simulate(SimulateArgs),
    /// Probe the existence conditions of a penalty numerically.
    CheckPenalty(CheckArgs),
    /// Write the sample covariance (divisor n) of a data file.
    Cov(CovArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Raw observations, one row per case (header optional).
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    /// Covariance or correlation matrix (needs --n).
    #[arg(long, value_name = "CSV")]
    pub cov: Option<PathBuf>,
    /// Sample size behind --cov.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// JSON file with defaults for any of the flags.
    #[arg(long, value_name = "JSON")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    /// none, loading-trace, sample-variance, akaike or hirose.
    #[arg(long)]
    pub penalty: Option<String>,
    /// soft, vanilla:RHO or custom:RHO.
    #[arg(long)]
    pub scaling: Option<String>,
    #[arg(long)]
    pub em_iters: Option<usize>,
    #[arg(long)]
    pub newton_iters: Option<usize>,
    /// Convergence tolerance on the max-abs Newton step.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub q: Option<usize>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// A..B or a comma list.
    #[arg(long)]
    pub q_grid: Option<String>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// A3, B3, A5, B5, A8 or B8.
    #[arg(long)]
    pub setting: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma list of FAMILY[:SCALING], e.g. none,hirose:soft,akaike:vanilla:1.
    #[arg(long)]
    pub estimators: Option<String>,
    /// Number of factors fitted for the bias and Heywood part.
    #[arg(long)]
    pub q: Option<usize>,
    /// Also run AIC/BIC selection over this grid.
    #[arg(long)]
    pub q_grid: Option<String>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub em_iters: Option<usize>,
    #[arg(long)]
    pub newton_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Per-replicate CSV; defaults to the output path with a
    /// `.replicates.csv` suffix.
    #[arg(long, value_name = "CSV")]
    pub replicates_csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub penalty: Option<String>,
    #[arg(long)]
    pub scaling: Option<String>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CovArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Write the correlation matrix instead.
    #[arg(long)]
    pub correlation: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Select(a) => commands::select(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::CheckPenalty(a) => commands::check_penalty(a),
        Command::Cov(a) => commands::cov(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
