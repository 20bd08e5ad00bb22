//! `prbshare`: ingest DCI logs, forecast PRB demand, sweep and simulate the
//! two-network partition.
//!
//! Exit codes: 0 when every output was written, 2 for usage and validation
//! errors (including unreadable inputs), 1 for runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

#[derive(Debug, Parser)]
#[command(name = "prbshare", version, about = "PRB demand forecasting and LTE/NR spectrum partitioning")]
pub struct Cli {
    /// Seed for every random choice in the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// JSON configuration for the command (problem, loop or synth config,
    /// grid file, or stored simulation, depending on the command).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a decoded DCI log into a PRB demand series.
    Ingest(IngestArgs),
    /// Build a surrogate NR series from a reference series.
    Synth(SynthArgs),
    /// Rank forecasting models by walk-forward RMSE.
    Forecast(ForecastArgs),
    /// Solve one allocation problem.
    Allocate(AllocateArgs),
    /// Sweep the intent weight for several pool sizes and variants.
    Sweep(SweepArgs),
    /// Replay the control loop over two demand series.
    Simulate(SimulateArgs),
    /// Summarize a transcript or compare two series.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Ms,
    Minute,
    Hour,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct IngestArgs {
    /// DCI log CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "hour")]
    pub granularity: Granularity,
    /// Keep only records of this DCI format (e.g. 2B).
    #[arg(long)]
    pub dci_format: Option<String>,
    #[arg(long, default_value = "LTE")]
    pub label: String,
    /// Output file stem; defaults to `<label>_<granularity>`.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct SynthArgs {
    /// Reference series CSV.
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 24)]
    pub block_len: usize,
    /// Standard deviation of the additive jitter.
    #[arg(long, default_value_t = 0.5)]
    pub jitter: f64,
    /// Output length; defaults to the reference length.
    #[arg(long)]
    pub target_len: Option<usize>,
    #[arg(long, default_value = "NR")]
    pub label: String,
    #[arg(long, default_value = "nr_synth")]
    pub name: String,
    /// Points on the written CDF grid.
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct ForecastArgs {
    /// Series CSV to evaluate.
    #[arg(long)]
    pub series: PathBuf,
    /// Grid file (JSON array of model specs); overrides --preset.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Bundled grid: lte-hour, nr-hour, lte-minute or nr-minute.
    #[arg(long, default_value = "lte-hour")]
    pub preset: String,
    /// Drop the neural model from the grid.
    #[arg(long)]
    pub statistical_only: bool,
    #[arg(long, default_value_t = 0.66)]
    pub train_fraction: f64,
    /// Also write the winning spec and its predicted demand.
    #[arg(long)]
    pub select: bool,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct AllocateArgs {
    /// Problem JSON; `--config` works too.
    #[arg(long)]
    pub problem: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct SweepArgs {
    /// JSON with `stats_a` and `stats_b` demand statistics.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// LTE demand series; its statistics are used when --stats is absent.
    #[arg(long)]
    pub lte: Option<PathBuf>,
    /// NR demand series.
    #[arg(long)]
    pub nr: Option<PathBuf>,
    /// Actual LTE demand for the surplus columns (defaults to --lte).
    #[arg(long)]
    pub demand_lte: Option<PathBuf>,
    /// Actual NR demand for the surplus columns (defaults to --nr).
    #[arg(long)]
    pub demand_nr: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "10,40,50")]
    pub pool: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "max,avg")]
    pub variants: Vec<String>,
    #[arg(long, default_value_t = 0.01)]
    pub gamma_step: f64,
    /// Allow fractional PRB counts.
    #[arg(long)]
    pub continuous: bool,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub lte: PathBuf,
    #[arg(long)]
    pub nr: PathBuf,
    #[arg(long)]
    pub retrain_every: Option<usize>,
    #[arg(long)]
    pub allocate_every: Option<usize>,
    #[arg(long)]
    pub pool: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// max, avg or autofairest.
    #[arg(long)]
    pub variant: Option<String>,
    /// Values held as history before the first loop epoch
    /// (default: 66% of the series).
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Grid file; defaults to the statistical part of --preset.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value = "lte-hour")]
    pub preset: String,
    /// Derive demand statistics from observed rather than predicted values.
    #[arg(long)]
    pub observed_stats: bool,
    #[arg(long)]
    pub continuous: bool,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct ReportArgs {
    /// JSON-lines transcript to summarize.
    #[arg(long, conflicts_with = "compare")]
    pub transcript: Option<PathBuf>,
    /// Recompute every policy from the transcript's telemetry; needs
    /// `--config simulation.json`.
    #[arg(long, requires = "transcript")]
    pub verify: bool,
    /// Two series to compare (distribution similarity).
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub compare: Option<Vec<PathBuf>>,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}
