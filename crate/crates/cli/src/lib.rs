//! The `gentac` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
pub mod dataset;
pub mod manifest;

/// Bad arguments or configuration; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "gentac", version, about = "Team-sport trajectory generation, event recognition and tactical metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonicalize raw tracking files into a dataset directory.
    Ingest(IngestArgs),
    /// Resample a clip to another frame rate.
    Resample(ResampleArgs),
    /// Resolve duplicates, fill gaps, repair anomalies and smooth a clip.
    Refine(RefineArgs),
    /// Train the trajectory diffusion model.
    TrainTraj(TrainArgs),
    /// Fine-tune a checkpoint on a tagged subset.
    Finetune(FinetuneArgs),
    /// Train the event classifier.
    TrainEvent(TrainArgs),
    /// Sample K futures for a clip.
    Sample(SampleArgs),
    /// Displacement and structure errors of sampled futures.
    EvaluateTraj(EvaluateTrajArgs),
    /// Classify labelled clips and score the predictions.
    EvaluateEvent(EvaluateEventArgs),
    /// Classify sampled futures and summarize the spread.
    ForecastEvent(ForecastEventArgs),
    /// Generate synthetic datasets.
    MakeFixtures(FixtureArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sport: Option<String>,
    #[arg(long)]
    pub fps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub league: Option<String>,
    #[arg(long)]
    pub team0: Option<String>,
    #[arg(long)]
    pub team1: Option<String>,
    /// Event subtype of every ingested clip.
    #[arg(long)]
    pub event: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub target_fps: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory or clip file.
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint to write; the metrics log goes next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Offense,
    Defense,
}

#[derive(Debug, Args)]
#[group(id = "filter", required = true, multiple = false)]
pub struct FilterArgs {
    #[arg(long)]
    pub team: Option<String>,
    #[arg(long)]
    pub league: Option<String>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    /// Base checkpoint (forecaster or event classifier).
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    /// Window length in seconds.
    #[arg(long)]
    pub window: Option<f64>,
    /// Horizon in seconds.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Clip whose frames from `--start` on hold the history.
    #[arg(long)]
    pub history: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// First history frame, as an offset into the clip.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Ground-truth future for single-team models; defaults to the frames
    /// after the history.
    #[arg(long)]
    pub future: Option<PathBuf>,
    /// Output file stem; defaults to the history file stem.
    #[arg(long)]
    pub stem: Option<String>,
    #[command(flatten)]
    pub rollout: RolloutArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvaluateTrajArgs {
    /// Directory of `<stem>_k<index>.json` samples.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory (or file) of ground-truth clips named `<stem>.json`.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Comma-separated horizons in seconds.
    #[arg(long, value_delimiter = ',', required = true)]
    pub horizons: Vec<f64>,
    /// Report CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvaluateEventArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ForecastEventArgs {
    #[arg(long)]
    pub history: PathBuf,
    /// Forecaster checkpoint.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Event classifier checkpoint.
    #[arg(long)]
    pub classifier: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    #[arg(long)]
    pub future: Option<PathBuf>,
    #[command(flatten)]
    pub rollout: RolloutArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    ConstantVelocity,
    Circular,
    TwoStyle,
    Events,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long, value_enum)]
    pub kind: FixtureKind,
    /// Clips in total, or per league / per class for the tagged kinds.
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub frames: usize,
    #[arg(long, default_value_t = 4.0)]
    pub max_speed: f64,
    #[arg(long, default_value_t = 0.0)]
    pub velocity_noise: f64,
    #[command(flatten)]
    pub common: Common,
}

/// Parses `argv` (program name first), runs one subcommand and returns the
/// exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let line = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {line}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}
