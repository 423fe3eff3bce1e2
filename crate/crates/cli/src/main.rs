//! `pdelin` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration or schema error, 3 domain error,
//! 4 acceptance failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "pdelin", version, about = "Bayesian linearization for nonlinear PDE inverse problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate white-noise or fixed-design data from a config.
    Simulate(SimulateArgs),
    /// Posterior, credible bands and optional EB trace for a data directory.
    Infer(InferArgs),
    /// Run a study: figure, contraction, coverage or darcy-refinement.
    Experiment(ExperimentArgs),
    /// Dump a singular system as `ell,kappa,sign,index_tuple`.
    BasisAudit(AuditArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct InferArgs {
    pub config: PathBuf,
    /// Directory holding `observation.csv`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, group = "prior")]
    pub alpha: Option<f64>,
    #[arg(long, group = "prior")]
    pub eb: bool,
    #[arg(long, group = "prior")]
    pub hb: bool,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub delta0: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest tolerated fraction of draws outside the inversion domain.
    #[arg(long)]
    pub max_excluded: Option<f64>,
}

#[derive(Args)]
pub struct ExperimentArgs {
    pub study: String,
    /// Figure case for the `figure` study.
    pub case: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct AuditArgs {
    /// laplacian, volterra, darcy1d, darcy1d-mixed, heat or heat-discrete.
    pub system: String,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Largest index per space axis (grid size for heat-discrete).
    #[arg(long, default_value_t = 16)]
    pub size: usize,
    /// Time indices or steps for the heat systems; defaults to `size`.
    #[arg(long)]
    pub time: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

fn init_threads() -> Result<(), commands::CliError> {
    let Ok(v) = std::env::var("PDELIN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| pdelin::Error::Config(format!("PDELIN_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| pdelin::Error::Config(format!("cannot size the thread pool: {e}")))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Infer(a) => commands::infer(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::BasisAudit(a) => commands::basis_audit(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pdelin: {e}");
            ExitCode::from(e.code())
        }
    }
}
