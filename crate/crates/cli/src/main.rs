mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qris_core::encoding::InputMode;
use qris_core::training::LambdaSchedule;

/// Noise-aware hybrid quantum classifier for link-blockage prediction.
#[derive(Parser, Debug)]
#[command(name = "qris", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset file.
    GenData(GenDataArgs),
    /// Train the classifier; writes per-epoch metrics and the final parameters.
    Train(TrainArgs),
    /// Evaluate saved parameters on the test split of a dataset.
    Eval(EvalArgs),
    /// Train and evaluate over a grid of noise levels or damping limits.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    /// Number of samples (at least 3).
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-pixel spread of the class image patterns.
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    /// Share of samples in the training split.
    #[arg(long, default_value_t = qris_core::dataset::DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Training options; unset flags fall back to the config file, then to the
/// built-in defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct TrainFlags {
    /// TOML file with training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Depolarizing probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Dephasing probability.
    #[arg(long)]
    pub q: Option<f64>,
    /// Relative spread of the per-sample noise draws.
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    pub gamma_init: Option<f64>,
    #[arg(long)]
    pub fmin: Option<f64>,
    /// Initial fidelity-penalty weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_cap: Option<f64>,
    #[arg(long, value_enum)]
    pub lambda_schedule: Option<ScheduleArg>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// hybrid, image-only, channel-only or no-qris-baseline.
    #[arg(long, value_parser = parse_mode)]
    pub config_selector: Option<InputMode>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ScheduleArg {
    PerBatch,
    PerSample,
}

impl From<ScheduleArg> for LambdaSchedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::PerBatch => LambdaSchedule::PerBatch,
            ScheduleArg::PerSample => LambdaSchedule::PerSample,
        }
    }
}

fn parse_mode(s: &str) -> Result<InputMode, String> {
    s.parse().map_err(|e: qris_core::Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Directory receiving metrics.csv and params.txt.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub flags: TrainFlags,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    /// CSV file for the evaluation row.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: TrainFlags,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Noise,
    Damping,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated values of p (noise) or gamma_max (damping).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Comma-separated input configurations.
    #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
    pub selectors: Option<Vec<InputMode>>,
    #[command(flatten)]
    pub flags: TrainFlags,
}

/// Failure classes mapped to exit codes 1 and 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::GenData(args) => commands::gen_data(&args),
        Command::Train(args) => commands::train(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Sweep(args) => commands::sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
