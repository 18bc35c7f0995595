//! `wendmat` command-line front end: kernel evaluation, convergence tables,
//! likelihood fits, simulation, replication studies, kriging and
//! cross-validation over CSV data.

mod commands;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] wendmat::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    /// 0 success, 2 invalid input, 3 numerical failure, 4 failed check.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) | CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Check(_) => 4,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "wendmat",
    version,
    about = "Generalized Wendland and Matérn covariance toolkit"
)]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate a correlation function over a grid of distances.
    Eval(EvalArgs),
    /// Maximum gap between φ and its Matérn limit over a ν × μ grid.
    ConvergeTable(ConvergeArgs),
    /// Maximum-likelihood fit of a covariance model to point data.
    Fit(FitArgs),
    /// Simulate one Gaussian random field realization.
    Simulate(SimulateArgs),
    /// Replication study of the ML estimates for the φ family.
    Study(StudyArgs),
    /// Kriging predictions at target locations.
    Predict(PredictArgs),
    /// Cross-validation scores of a fitted model.
    Cv(CvArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyArg {
    /// φ_{ν,μ,β}, support set through β.
    Phi,
    /// Matérn with smoothness ν.
    Matern,
    /// Generalized Wendland with explicit support.
    Wendland,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "phi")]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    /// Shape μ (phi, wendland).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Scale β (phi, matern).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Compact support δ (wendland; for phi, the β giving this support).
    #[arg(long)]
    pub support: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Nugget as a fraction of the total variance.
    #[arg(long, default_value_t = 0.0)]
    pub nugget: f64,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Distances: a comma list, or start:stop:count.
    #[arg(long)]
    pub r_grid: Option<String>,
    /// CSV output path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2,2.5")]
    pub nu_list: Vec<f64>,
    /// μ columns after the leading λ(2, ν) column.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40,80,160,320,640")]
    pub mu_list: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// CSV output path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Point CSV with a value column.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "phi")]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    /// Hold a parameter fixed, e.g. `--fix mu=2` (sigma2, beta, mu, nugget).
    #[arg(long, value_name = "NAME=VALUE")]
    pub fix: Vec<String>,
    /// Starting value for a free parameter, e.g. `--init beta=0.1`.
    #[arg(long, value_name = "NAME=VALUE")]
    pub init: Vec<String>,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: u64,
    /// Skip standard errors.
    #[arg(long)]
    pub no_fisher: bool,
    /// Parameter file output path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of uniform locations in the unit cube.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Simulate at these locations instead.
    #[arg(long)]
    pub locations: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV output path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Compact support of the generating model.
    #[arg(long, conflicts_with = "beta")]
    pub support: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Hold a parameter at its true value (sigma2, beta, mu).
    #[arg(long, value_name = "NAME")]
    pub fix: Vec<String>,
    /// Skip Fisher standardization.
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: u64,
    /// CSV output path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Training CSV with a value column.
    #[arg(long)]
    pub train: PathBuf,
    /// Target CSV; a value column, if present, is scored.
    #[arg(long)]
    pub targets: PathBuf,
    /// Parameter file, as written by `fit`.
    #[arg(long)]
    pub params: PathBuf,
    /// CSV output path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CvArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    /// Hold out this fraction at random instead of leave-one-out.
    #[arg(long)]
    pub holdout: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Score record output path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Eval(a) => commands::eval(&a),
        Command::ConvergeTable(a) => commands::converge(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Study(a) => commands::study(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Cv(a) => commands::cv(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
