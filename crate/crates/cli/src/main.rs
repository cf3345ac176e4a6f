//! `dzeros`: batch driver for the dirichlet-zeros library.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid input, 3 the
//! iteration or a numerical method did not converge.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Environment variable read when --threads is not given.
pub const THREADS_ENV: &str = "DZEROS_THREADS";

#[derive(Parser, Debug)]
#[command(name = "dzeros", version, about = "Zero sets of Dirichlet series in Bergman-type spaces")]
struct Cli {
    /// Worker threads (default: $DZEROS_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Divisor-power partial sums and block sums.
    Sieve(SieveArgs),
    /// Discretize a profile CSV into a Dirichlet polynomial.
    Discretize(DiscretizeArgs),
    /// Construct a Dirichlet polynomial vanishing on a zero set.
    ConstructZero(ConstructArgs),
    /// Blaschke-type sums and cone membership of a zero set.
    CheckConditions(ConditionArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, serde::Serialize)]
pub struct SieveArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Sieve limit; scientific notation accepted.
    #[arg(long, default_value = "1e6", value_parser = commands::parse_count)]
    pub x_max: u64,
    /// Block exponent γ; block sums are written only when given.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub j_min: Option<u64>,
    #[arg(long)]
    pub j_max: Option<u64>,
    /// Partial-sum CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Block-sum CSV (default: out with extension .blocks.csv, or stdout after the sums).
    #[arg(long)]
    pub blocks: Option<PathBuf>,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct DiscretizeArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long = "N", alias = "n")]
    pub n: u64,
    /// Profile CSV with columns xi, re, im.
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, default_value = "1e7", value_parser = commands::parse_count)]
    pub x_max: u64,
    /// Output polynomial JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional partition CSV (j, n_j, A_j).
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Optional report JSON (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct ConstructArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long = "N", alias = "n", default_value_t = 4000)]
    pub n: u64,
    /// Zero set JSON: [{"sigma": .., "t": .., "multiplicity": ..}, ...].
    #[arg(long)]
    pub zeros: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub iters: usize,
    /// Output polynomial JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Run report JSON (default: out with extension .report.json).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "1e7", value_parser = commands::parse_count)]
    pub x_max: u64,
    /// Box half-height R and width τ as "R,tau".
    #[arg(long, default_value = "6,6")]
    pub r#box: String,
    /// ∂̄ grid spacing.
    #[arg(long, default_value_t = 0.02)]
    pub h: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub tolerance: f64,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct ConditionArgs {
    #[arg(long)]
    pub zeros: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub gammas: Vec<f64>,
    /// Cone vertex height and aperture as "t0,c".
    #[arg(long, allow_hyphen_values = true)]
    pub cone: Option<String>,
    /// Report JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct VerifyArgs {
    /// Comma-separated check names (default: all).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Restrict the block-exponent check to this α.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = cli
        .threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Sieve(a) => commands::sieve(a),
        Command::Discretize(a) => commands::discretize(a),
        Command::ConstructZero(a) => commands::construct_zero(a),
        Command::CheckConditions(a) => commands::check_conditions(a),
        Command::Verify(a) => commands::verify(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
