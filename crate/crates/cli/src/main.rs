//! `chebquad`: node-count bounds, constructions and checks for equal-weight quadrature.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(name = "chebquad", version, about = "Equal-weight quadrature bounds and constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// R-functional, Kane, upper and certificate bounds per degree.
    Bounds(BoundsArgs),
    /// Build an equal-weight quadrature (damped least squares, or the hull path with --faithful).
    Construct(ConstructArgs),
    /// Check a quadrature file against a weight.
    Verify(VerifyArgs),
    /// Exponent fits: stretched-exponential law (--alpha) or R-functional growth (--weight).
    Scaling(ScalingArgs),
    /// Smallest node count found by grid search, for degrees up to 3.
    Brute(BruteArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Common {
    /// Weight spec: a JSON file or inline JSON.
    #[arg(long)]
    weight: String,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (default: from the --out extension).
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated increasing degrees.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Slack parameter of the upper bound, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Certificate exponent override.
    #[arg(long)]
    ell: Option<u32>,
    /// Random starts of the Kane supremum search.
    #[arg(long, default_value_t = 16)]
    restarts: usize,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Node count (default: the Kane node bound for each degree).
    #[arg(long = "N")]
    nodes: Option<usize>,
    /// Verification tolerance (default 1e-9, or 1e-8 with --faithful).
    #[arg(long)]
    tol: Option<f64>,
    /// Use the hull construction (degrees up to 3).
    #[arg(long)]
    faithful: bool,
    /// Solver restarts, or continuation starts with --faithful.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Quadrature JSON (a single document or an array).
    #[arg(long)]
    quadrature: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    /// Weight whose R-functional growth is fitted.
    #[arg(long)]
    weight: Option<String>,
    /// Exponent of exp(-|θ|^{-α}) for the stretched-exponential law.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct BruteArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Largest node count tried.
    #[arg(long = "N", default_value_t = 8)]
    nodes: usize,
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{op} failed: {message}")]
    Numeric { op: &'static str, message: String },
    #[error("{0}")]
    Rejected(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Numeric { .. } | CliError::Rejected(_) => 3,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CHEBQUAD_THREADS") else { return Ok(()) };
    let threads: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("CHEBQUAD_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Bounds(a) => commands::bounds(&a),
        Command::Construct(a) => commands::construct(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Scaling(a) => commands::scaling(&a),
        Command::Brute(a) => commands::brute(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chebquad: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
