//! `specext <command> --config <path> [--out-dir <path>] [--seed <int>]`
//!
//! Exit status: 0 success, 1 configuration or I/O error (nothing written),
//! 2 infeasible data (nothing written), 3 a solve did not converge (files
//! written with `converged = false`).

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Command;

#[derive(Parser)]
#[command(name = "specext", version, about = "Rational spectral estimation from covariance and cepstral moments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute covariances and ν-cepstral coefficients of a model.
    Moments(JobArgs),
    /// Solve for one λ.
    Solve(JobArgs),
    /// Residuals and certificate at a given or random point.
    Verify(JobArgs),
    /// Solve a model's moment problem for a list of λ.
    SweepLambda(JobArgs),
    /// Solve on a sequence of grid sizes.
    ConvergeGrid(JobArgs),
    /// Entropy of the solution as a function of λ.
    EntropyCurve(JobArgs),
}

#[derive(Args)]
struct JobArgs {
    /// JSON job configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Seed for random starting or verification points.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Io(String),
}

impl CliError {
    pub fn from_core(e: specext::Error) -> Self {
        use specext::Error as E;
        match e {
            E::Infeasible { .. } | E::Factorization { .. } | E::NegativeSpectrum { .. } | E::InvalidMoments(_) => {
                CliError::Infeasible(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Infeasible(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible data: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

fn set_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SPECEXT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("SPECEXT_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    set_threads()?;
    let (command, args) = match cli.command {
        Cmd::Moments(a) => (Command::Moments, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::SweepLambda(a) => (Command::SweepLambda, a),
        Cmd::ConvergeGrid(a) => (Command::ConvergeGrid, a),
        Cmd::EntropyCurve(a) => (Command::EntropyCurve, a),
    };
    let cfg = config::load(&args.config)?;
    let job = config::resolve(cfg, command, args.out_dir, args.seed)?;
    run::execute(job)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("at least one solve did not converge");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("specext: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
