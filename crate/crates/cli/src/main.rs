mod bench;
mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmpad::{Aggregation, Budget, Threads, Window};

/// Matrix-profile anomaly scoring for multivariate time series.
#[derive(Debug, Parser)]
#[command(name = "mmpad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a CSV series and write one score per timestamp.
    Score(ScoreArgs),
    /// Evaluate a score file against the series' Label column.
    Eval(EvalArgs),
    /// Score and evaluate a directory of labeled series under several configurations.
    Bench(BenchArgs),
    /// Write a synthetic K-of-N series with labels.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    input: std::path::PathBuf,
    /// Score file; defaults to `<input stem>.scores.csv` beside the input.
    #[arg(long)]
    output: Option<std::path::PathBuf>,
    #[command(flatten)]
    detector: DetectorArgs,
    /// Accepted for compatibility; scoring is always deterministic.
    #[arg(long)]
    seedless_deterministic: bool,
}

#[derive(Debug, Args)]
struct DetectorArgs {
    /// Subsequence length, or `auto` to infer it from the first channel.
    #[arg(long, default_value = "auto")]
    window: Window,
    /// Neighbor count; the k-th neighbor distance is the score.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Dimension cutoff: an integer in [1, d] or a fraction in (0, 1).
    #[arg(long, default_value_t = 1.0)]
    dim: f64,
    /// Channel aggregation: `pre` or `post` sorting.
    #[arg(long, default_value = "pre")]
    agg: Aggregation,
    /// Proxy cost above which the series is downsampled, or `none`.
    #[arg(long, default_value_t = Budget::default())]
    budget: Budget,
    /// Skip per-channel z-score normalization.
    #[arg(long)]
    no_normalize: bool,
    /// Worker threads, or `auto`.
    #[arg(long, env = "MMPAD_THREADS", default_value = "auto")]
    threads: Threads,
}

impl DetectorArgs {
    fn config(&self) -> mmpad::DetectorConfig {
        mmpad::DetectorConfig {
            window: self.window,
            k: self.k,
            d_star: self.dim,
            aggregation: self.agg,
            budget: self.budget,
            normalize: !self.no_normalize,
            threads: self.threads,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum EvalWindow {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for EvalWindow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(EvalWindow::Auto);
        }
        s.parse()
            .map(EvalWindow::Fixed)
            .map_err(|_| format!("expected `auto` or a non-negative integer, got {s:?}"))
    }
}

impl std::fmt::Display for EvalWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalWindow::Auto => f.write_str("auto"),
            EvalWindow::Fixed(w) => write!(f, "{w}"),
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Series CSV with a Label column.
    #[arg(long)]
    input: std::path::PathBuf,
    #[arg(long)]
    scores: std::path::PathBuf,
    /// Buffer width for the volume metrics, or `auto` for the first channel's period.
    #[arg(long, default_value = "auto")]
    eval_window: EvalWindow,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "auc-pr,auc-roc,vus-pr,vus-roc"
    )]
    metrics: Vec<mmpad::Metric>,
    /// Report destination, `-` for standard output.
    #[arg(long, default_value = "-")]
    output: String,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Directory of labeled CSV series.
    #[arg(long)]
    data_dir: std::path::PathBuf,
    /// One configuration per line: `name key=value ...`.
    #[arg(long)]
    config: std::path::PathBuf,
    /// JSON report destination.
    #[arg(long)]
    report: std::path::PathBuf,
    /// Precomputed scores laid out as `<dir>/<method>/<dataset>.csv`.
    #[arg(long)]
    external_scores: Option<std::path::PathBuf>,
    #[arg(long, default_value = "auto")]
    eval_window: EvalWindow,
    /// Default worker threads for configurations that do not set `threads`.
    #[arg(long, env = "MMPAD_THREADS", default_value = "auto")]
    threads: Threads,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    d: usize,
    /// Number of channels carrying the anomaly.
    #[arg(long, default_value_t = 1)]
    k_dims: usize,
    #[arg(long, default_value_t = 50.0)]
    period: f64,
    #[arg(long, default_value_t = 1200)]
    anomaly_start: usize,
    #[arg(long, default_value_t = 100)]
    anomaly_len: usize,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: std::path::PathBuf,
}

/// Failure categories mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Score(args) => commands::score(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Bench(args) => bench::run(&args),
        Command::Synth(args) => commands::synth(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
