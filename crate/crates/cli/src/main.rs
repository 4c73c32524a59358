//! `spectra` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid configuration or input, 3 numerical
//! failure (size collision, eigensolver, singular fit), 1 I/O failure.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(spectra::Error),
    Io(std::io::Error),
}

impl From<spectra::Error> for CliError {
    fn from(e: spectra::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(spectra::Error::Io(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Core(e) if e.is_numerical() => write!(f, "numerical failure: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "spectra", version, about = "Bias-reduced estimation of spectral trace functionals")]
struct Cli {
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate tr f(Sigma) from a data file or from a simulated sample.
    Estimate(EstimateArgs),
    /// Print the sample-size schedule and aggregation coefficients.
    Coeffs(CoeffsArgs),
    /// Monte Carlo RMSE over several sample sizes with a log-log slope fit.
    Rates(ExperimentArgs),
    /// Distance of the standardized estimator to N(0, 1).
    Normality(ExperimentArgs),
    /// Errors of the estimated spectral measure over a function grid.
    Supnorm(SupnormArgs),
    /// Compare the sample spectrum of white data with the Marchenko-Pastur law.
    MpCompare(MpArgs),
}

#[derive(Args, Debug, Default)]
pub struct EstimatorArgs {
    /// Test function, e.g. log1p, square, sine, bump:2,0.5, 0.5*rational.
    #[arg(long = "f")]
    pub f: Option<String>,
    /// plugin | aggregate | jackknife.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Random subsets per jackknife level.
    #[arg(long = "B", alias = "subsets")]
    pub b: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// CSV file with one observation per row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// identity:<d> | poly:<d>,<beta> | custom:<l1>,<l2>,...
    #[arg(long)]
    pub model: Option<String>,
    /// Attach a random orthonormal basis to the model (true/false).
    #[arg(long)]
    pub rotate: Option<bool>,
    /// Sample size when simulating from --model.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub est: EstimatorArgs,
}

#[derive(Args, Debug)]
pub struct CoeffsArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub rotate: Option<bool>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated sample sizes (rates).
    #[arg(long = "n-list")]
    pub n_list: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// oracle | plugin.
    #[arg(long)]
    pub standardization: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub est: EstimatorArgs,
}

#[derive(Args, Debug)]
pub struct SupnormArgs {
    /// Grid CSV (index,order,name); defaults to a generated grid.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Size of the generated grid.
    #[arg(long = "grid-size")]
    pub grid_size: Option<usize>,
    #[command(flatten)]
    pub exp: ExperimentArgs,
}

#[derive(Args, Debug)]
pub struct MpArgs {
    /// Aspect ratio of the reference law; defaults to d/n.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = cli.config.as_deref();
    let result = match cli.command {
        Command::Estimate(a) => commands::estimate(a, config),
        Command::Coeffs(a) => commands::coeffs(a, config),
        Command::Rates(a) => commands::rates(a, config),
        Command::Normality(a) => commands::normality(a, config),
        Command::Supnorm(a) => commands::supnorm(a, config),
        Command::MpCompare(a) => commands::mp_compare(a, config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
