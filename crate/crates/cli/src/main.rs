//! `scoreline`: ingest results, simulate leagues, fit and compare goal models.
//!
//! Exit codes: 0 success, 1 finished with warnings, 2 fatal error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scoreline::estimation::ModelKind;
use scoreline::prediction::Market;

#[derive(Debug, Parser)]
#[command(name = "scoreline", version, about = "Dependent goal models for football scores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads for replicate loops (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read results files into one canonical dataset.
    Ingest(IngestArgs),
    /// Generate a synthetic league with known parameters.
    Simulate(SimulateArgs),
    /// Fit one model at one day and write its parameters.
    Fit(FitArgs),
    /// Pick the decay rate that maximises the out-of-sample log score.
    TuneXi(TuneArgs),
    /// Rolling out-of-sample forecasts scored by RPS.
    Backtest(BacktestArgs),
    /// Resampling tests of the independence and Poisson assumptions.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Results files (Date, HomeTeam, AwayTeam, FTHG, FTAG columns).
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// dmy, mdy or iso; detected from the file when omitted.
    #[arg(long)]
    pub date_format: Option<String>,
    /// League label for files without a `Div` column.
    #[arg(long)]
    pub league: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 20)]
    pub teams: usize,
    #[arg(long, default_value_t = 5)]
    pub seasons: usize,
    #[arg(long, default_value = "dc")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta1: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub theta2: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta3: f64,
    /// Per-season random-walk step of every rating; 0 keeps strengths fixed.
    #[arg(long, default_value_t = 0.0)]
    pub step: f64,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Canonical dataset written by `ingest` or `simulate`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "marco")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0.0)]
    pub xi: f64,
    /// Fit on matches before this day index (default: the whole dataset).
    #[arg(long)]
    pub day: Option<i64>,
    /// Bootstrap replicates for a θ₃ interval (Mar-Co only).
    #[arg(long, default_value_t = 0)]
    pub n_boot: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "dc")]
    pub model: ModelKind,
    /// Comma list (`0,0.001,0.002`) or range `start:stop:step`.
    #[arg(long)]
    pub xi_grid: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub burn_in_seasons: usize,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Models to compare; the first two also get a difference series and a
    /// reshuffle test.
    #[arg(long, value_delimiter = ',', default_values_t = [ModelKind::DixonColes, ModelKind::MarCo])]
    pub model: Vec<ModelKind>,
    /// One decay rate for all models or one per model.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
    pub xi: Vec<f64>,
    /// JSON list of `{"name", "kind", "xi"}` objects; replaces --model/--xi.
    #[arg(long)]
    pub models_file: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [Market::OneXTwo, Market::UO15, Market::UO25])]
    pub markets: Vec<Market>,
    #[arg(long, default_value_t = 1)]
    pub burn_in_seasons: usize,
    /// Reshuffle replicates.
    #[arg(long, default_value_t = 10_000)]
    pub n_b: usize,
    /// Also write one difference series per league label.
    #[arg(long)]
    pub per_league: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n_rep: usize,
    /// Largest goal count shown in the ratio table.
    #[arg(long, default_value_t = 6)]
    pub max_goals: u32,
    /// Run the tests separately for each league label.
    #[arg(long)]
    pub per_league: bool,
}

/// How a command ended when it did not fail outright.
pub enum Outcome {
    Clean,
    Warnings(Vec<String>),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let argv: Vec<String> = std::env::args().collect();
    let result = match &cli.command {
        Command::Ingest(a) => commands::ingest(a, &cli.common, &argv),
        Command::Simulate(a) => commands::simulate(a, &cli.common, &argv),
        Command::Fit(a) => commands::fit(a, &cli.common, &argv),
        Command::TuneXi(a) => commands::tune_xi(a, &cli.common, &argv),
        Command::Backtest(a) => commands::backtest(a, &cli.common, &argv),
        Command::Diagnose(a) => commands::diagnose(a, &cli.common, &argv),
    };
    match result {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Warnings(w)) => {
            for line in w {
                eprintln!("warning: {line}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
