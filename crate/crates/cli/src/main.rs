//! `bloomtrack`: fit GP hyperparameters, run front-tracking missions and
//! noise sweeps, generate synthetic fields and validate input files.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 runtime
//! failure. Flags override values from `--config`, which override built-in
//! defaults.

mod commands;
mod config;
mod rundir;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bloomtrack",
    version,
    about = "Algal-bloom front tracking simulator"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run config; the bundled default is used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Parent of the per-run output directories.
    #[arg(long, global = true, default_value = "runs")]
    pub out_dir: PathBuf,
    /// Replaces every seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps and fits (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reuse the newest run directory with the same config hash.
    #[arg(long, global = true)]
    pub resume: bool,
    /// Validate inputs and print the plan without writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit kernel hyperparameters to gridded training days.
    Fit(FitArgs),
    /// Run one mission and write its log and metrics.
    Simulate(SimulateArgs),
    /// Run a sensor-noise sweep.
    Sweep(SweepArgs),
    /// Rasterize a synthetic field to a grid file.
    GenField(GenFieldArgs),
    /// Check config and grid files.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Grid files, one per day; adds to `fit.grids` from the config.
    pub grids: Vec<PathBuf>,
    /// Points drawn per day.
    #[arg(long)]
    pub per_day: Option<usize>,
    /// Likelihood evaluation budget.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Number of optimizer starts.
    #[arg(long)]
    pub starts: Option<usize>,
    /// Noise standard deviation assumed by the fit, mg/m³.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Estimator name (`gp`, `lsq`).
    #[arg(long)]
    pub estimator: Option<String>,
    /// Mission duration, s.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Sensor noise standard deviation, mg/m³.
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',')]
    pub estimator: Option<Vec<String>>,
    /// Comma-separated sensor noise levels, mg/m³.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// Replicates per (sigma, estimator) cell.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Mission duration, s.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Also write every mission log as CSV.
    #[arg(long)]
    pub keep_logs: bool,
}

#[derive(Debug, Args)]
pub struct GenFieldArgs {
    /// `radial-blob`, `sinusoidal-front` or `linear-ramp`.
    pub kind: String,
    /// Field parameter as `name=value`; comma-separated values become lists.
    #[arg(long = "param", short = 'p')]
    pub params: Vec<String>,
    /// `xmin,ymin,xmax,ymax`.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub domain: Vec<f64>,
    /// `ny,nx`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub shape: Vec<usize>,
    /// Output file; defaults to `field.csv` in a new run directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// `csv-grid` or `json-grid`; guessed from the output extension.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Run configs (`.json` with a `mission`, `sweep` or `fit` key) or grid files.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("config error: --threads {n}: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Fit(a) => commands::fit(&cli.global, a),
        Command::Simulate(a) => commands::simulate(&cli.global, a),
        Command::Sweep(a) => commands::sweep(&cli.global, a),
        Command::GenField(a) => commands::gen_field(&cli.global, a),
        Command::Validate(a) => commands::validate(&cli.global, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
