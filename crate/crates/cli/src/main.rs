//! `vaxconcern`: split, explore, train, predict, evaluate and prompt.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vaxconcern::{Error, ErrorClass};

#[derive(Debug, Parser)]
#[command(
    name = "vaxconcern",
    version,
    about = "Vaccine-concern tweet classification"
)]
struct Cli {
    /// TOML configuration file; built-in defaults apply otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for splits, learners and exemplar selection.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; each run writes to `<out>/<name>/`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite an existing run directory.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Label distribution and most frequent terms.
    Eda(EdaArgs),
    /// Seeded train/test partition.
    Split(SplitArgs),
    /// Fit a classical model.
    Train(TrainArgs),
    /// Label a dataset with a trained model.
    Predict(PredictArgs),
    /// Score a run file against gold labels.
    Eval(EvalArgs),
    /// Label a dataset through the prompted model.
    LlmRun(LlmRunArgs),
}

#[derive(Debug, Args)]
struct EdaArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    top: Option<usize>,
    #[arg(long, default_value = "eda")]
    name: String,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long, default_value = "split")]
    name: String,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// mnb, svm, rf, br or cc.
    #[arg(long)]
    method: vaxconcern::Method,
    /// Defaults to the method tag.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// A `model.json` written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Defaults to `<method>-run`.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    /// Labelled dataset with the gold sets.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated labels to score; all twelve by default.
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    /// Also write the report as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MockFallbackKind {
    Keywords,
    None,
    Fail,
}

#[derive(Debug, Args)]
struct LlmRunArgs {
    /// Tweets to label.
    #[arg(long)]
    data: PathBuf,
    /// Labelled pool the few-shot exemplars are drawn from.
    #[arg(long)]
    train: PathBuf,
    #[arg(long, value_enum, default_value = "http")]
    backend: BackendKind,
    /// `digest<TAB>completion` table for the mock backend.
    #[arg(long)]
    mock_table: Option<PathBuf>,
    /// Mock answer for digests missing from the table.
    #[arg(long, value_enum, default_value = "keywords")]
    mock_fallback: MockFallbackKind,
    /// Response cache file, overriding the configured one.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Keep responses in memory only.
    #[arg(long, conflicts_with = "cache")]
    no_cache: bool,
    #[arg(long)]
    exemplars: Option<usize>,
    #[arg(long, default_value = "llm")]
    name: String,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

macro_rules! core_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}
core_from!(
    std::io::Error,
    vaxconcern::error::CorpusError,
    vaxconcern::error::LlmError,
    vaxconcern::error::EvalError,
    vaxconcern::error::LearnError,
    vaxconcern::error::AssetError
);

impl CliError {
    fn class(&self) -> ErrorClass {
        match self {
            CliError::Usage(_) => ErrorClass::Config,
            CliError::Core(e) => e.class(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.class() {
            ErrorClass::Config => 1,
            ErrorClass::Data => 2,
            ErrorClass::Backend => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let class = match self.class() {
            ErrorClass::Config => "config",
            ErrorClass::Data => "data",
            ErrorClass::Backend => "backend",
        };
        match self {
            CliError::Usage(m) => write!(f, "error[{class}]: {m}"),
            CliError::Core(e) => write!(f, "error[{class}]: {e}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
