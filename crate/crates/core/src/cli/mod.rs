//! `qtrack` command-line front end.
//!
//! Every subcommand takes its parameters from flags, from a JSON file given
//! with `--config`, or both; flags win. The merged configuration is echoed
//! into the run's output or manifest together with the raw flag and file
//! values so the run can be reproduced.
//!
//! Exit codes: 0 on success, 1 on runtime errors (including the hypothesis
//! budget), 2 on invalid or missing arguments.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{FileConfig, Format, PriorKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] crate::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qtrack",
    version,
    about = "Resolution limits and simulation for non-adaptive tracking of a moving target with noisy binary queries",
    after_help = "All information quantities are in nats (natural logarithm); rates are nats per query."
)]
pub struct Cli {
    /// JSON file with default values for any flag (snake_case keys).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "QTRACK_THREADS", value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity, dispersion and the approximate minimal resolution.
    Limits(LimitsArgs),
    /// Gaussian phase-transition curve as CSV with columns `rate,eps_hat`.
    Curve(CurveArgs),
    /// Monte Carlo excess-resolution probability per delta.
    ///
    /// CSV columns: delta, rate, trials, excess, p_hat, ci_low, ci_high,
    /// eps_hat, start_states, hypotheses, prior, caveat.
    Simulate(SimulateArgs),
    /// One episode: queries, answers, decoded state.
    Track(TrackArgs),
    /// Stochasticity and continuity diagnostics for the channel family.
    ValidateChannel(ValidateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChannelArgs {
    /// Crossover scale: crossover probability is zeta * f(|A|).
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Slope of the size map f(q) = slope * q + intercept.
    #[arg(long, allow_hyphen_values = true)]
    pub slope: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub intercept: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LimitsArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    /// Dimension [default: 1].
    #[arg(long)]
    pub d: Option<usize>,
    /// Target excess-resolution probability.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Also report the approximate excess probability at this resolution.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Maximal speed, for the regime caveat [default: 1/n].
    #[arg(long)]
    pub v_max: Option<f64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CurveArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Smallest rate [default: half the critical rate].
    #[arg(long)]
    pub rate_min: Option<f64>,
    /// Largest rate [default: 1.5 times the critical rate].
    #[arg(long)]
    pub rate_max: Option<f64>,
    /// Evenly spaced rates; the critical rate is added when in range [default: 101].
    #[arg(long)]
    pub points: Option<usize>,
    /// Maximal speed, for the regime caveat [default: 1/n].
    #[arg(long)]
    pub v_max: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// JSON sidecar with C, V, critical rate, n, d [default: <out>.json].
    #[arg(long, value_name = "PATH")]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Maximal speed per dimension [default: 1/n].
    #[arg(long)]
    pub v_max: Option<f64>,
    /// Resolutions to simulate, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "rates")]
    pub deltas: Option<Vec<f64>>,
    /// Decay rates -log(delta)/n in nats per query, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    /// Episodes per delta [default: 2000].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial-state distribution [default: uniform-product].
    #[arg(long, value_enum)]
    pub prior: Option<PriorKind>,
    /// Lattice points per axis for the worst-case-grid prior [default: 3].
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Initial location for the fixed-state prior, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    /// Initial velocity for the fixed-state prior, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub v: Option<Vec<f64>>,
    /// Codebook bias [default: smallest capacity-achieving input].
    #[arg(long)]
    pub p: Option<f64>,
    /// Largest number of hypotheses to decode over [default: 10000000].
    #[arg(long)]
    pub budget: Option<u64>,
    /// Draw a new codebook for every episode.
    #[arg(long)]
    pub fresh_codebook_per_trial: bool,
    /// Confidence level of the Wilson interval [default: 0.95].
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Run manifest [default: <out>.manifest.json, or stderr without --out].
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrackArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub v_max: Option<f64>,
    /// Target resolution.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial location [default: drawn uniformly from the seed].
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    /// Initial velocity [default: drawn uniformly from the seed].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub v: Option<Vec<f64>>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub budget: Option<u64>,
    /// JSON trace [default: stdout].
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// CSV of true and estimated positions for t = 0..n.
    #[arg(long, value_name = "PATH")]
    pub trajectory: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Query measures to check, comma separated [default: 0.1,0.3,0.5,0.7,0.9].
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// Perturbations, comma separated [default: 0.05,0.01,0.001,0.0001].
    #[arg(long, value_delimiter = ',')]
    pub xi: Option<Vec<f64>>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => Some(FileConfig::load(path)?),
        None => None,
    };
    let pool = match cli.threads {
        Some(0) => return Err(CliError::Usage("`threads` must be at least 1".into())),
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Io(e.to_string()))?,
        ),
        None => None,
    };
    let ctx = commands::Context {
        file: file.unwrap_or_default(),
        config_path: cli.config.clone(),
        threads: cli.threads,
    };
    let go = || match &cli.command {
        Command::Limits(a) => commands::limits(&ctx, a),
        Command::Curve(a) => commands::curve(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Track(a) => commands::track(&ctx, a),
        Command::ValidateChannel(a) => commands::validate_channel(&ctx, a),
    };
    match pool {
        Some(pool) => pool.install(go),
        None => go(),
    }
}
