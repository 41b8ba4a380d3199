//! `sensorctl`: policy tables, sensitivity sweeps and Monte Carlo checks for
//! the machine-repair, LQG, measurement-scheduling and direct
//! measurement-control models.
//!
//! Every command reads one JSON model from `--input` and writes a CSV or JSON
//! document to `--output` (stdout when omitted). Failures print
//! `error[category]: message` on stderr and exit with 2 (parse), 3 (invalid
//! model), 4 (numerical failure) or 1 (I/O).

mod commands;
mod error;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;
pub use output::{emit, flat_csv};

#[derive(Debug, Parser)]
#[command(
    name = "sensorctl",
    version,
    about = "Stochastic control with sensor management"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Machine-repair q-vectors and optimal control on a ρ grid, every stage.
    MrCurves,
    /// Machine-repair optimal expected cost while one parameter varies.
    MrSensitivity,
    /// Machine-repair expected cost, never-diagnose baseline and Monte Carlo check.
    MrCost,
    /// Generic finite PO-MDP: expected cost and stage-0 decisions.
    PomdpSolve,
    /// LQR gains, filter covariances and analytic expected cost.
    LqgGains,
    /// One seeded closed-loop LQG trajectory, or a Monte Carlo estimate with --rollouts.
    LqgSimulate,
    /// Optimal measurement schedule from a sensor menu.
    Schedule,
    /// Stage-0 cost-to-go curves for several sensor influences.
    DmcCurves,
    /// Optimal stage-0 control as a parameter and m00 vary.
    DmcSweep,
    /// Optimal stage-0 control at one filtered mean.
    DmcSolve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum FormArg {
    #[default]
    Unit,
    Exact,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Model JSON.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output path; written atomically. Stdout when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Root seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo rollouts.
    #[arg(long, global = true)]
    pub rollouts: Option<usize>,
    /// Number of grid points (ρ grid, sweep values, u0 grid or m00 offsets).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Output encoding; tables default to CSV, summaries to JSON.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Sweep parameter; every parameter when omitted.
    #[arg(long, global = true)]
    pub target: Option<String>,
    /// Explicit sweep values, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Option<Vec<f64>>,
    /// Interval `LO,HI` for the u0 axis (dmc-curves) or m00 offsets in σ00 units (dmc-sweep).
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub range: Option<Vec<f64>>,
    /// Filtered mean for dmc-solve; defaults to m_x.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub m00: Option<f64>,
    /// Overrides the model's sensor influence.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Sensor influences for dmc-curves, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub gammas: Option<Vec<f64>>,
    /// Closed form of the stage-0 cost-to-go.
    #[arg(long, global = true, value_enum, default_value_t = FormArg::Unit)]
    pub form: FormArg,
}

/// Caps rayon's global pool at `SENSORCTL_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SENSORCTL_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        CliError::Parse(format!(
            "SENSORCTL_THREADS = {raw:?} is not a positive integer"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Io(e.to_string()))
}

/// Runs one command and writes its output.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let text = render(cli)?;
    emit(cli.options.output.as_deref(), &text)
}

/// Runs one command and returns the encoded output without writing it.
pub fn render(cli: &Cli) -> Result<String, CliError> {
    commands::dispatch(cli.command, &cli.options)
}
