use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use countqa_core::model::{CountStrategy, InstanceStrategy};

/// Answer count queries over text segments and evaluate the answers.
///
/// Run settings come from, in decreasing priority: command-line flags,
/// COUNTQA_* environment variables, the --config file, built-in defaults.
#[derive(Debug, Parser)]
#[command(name = "countqa", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Answer every query of a dataset and write predictions as JSON lines.
    Answer(AnswerArgs),
    /// Score a predictions file against a dataset's gold annotations.
    Evaluate(EvaluateArgs),
    /// Serve the HTTP API over one or more datasets.
    Serve(ServeArgs),
    /// Check a dataset file and report every problem found.
    ValidateDataset(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct AnswerArgs {
    /// Dataset file (JSON lines).
    #[arg(long, short)]
    pub dataset: PathBuf,
    /// Predictions output; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, env = "COUNTQA_JOBS")]
    pub jobs: Option<usize>,
    /// Suppress the per-query summary lines on stderr.
    #[arg(long, short)]
    pub quiet: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions file written by `answer`.
    #[arg(long, short)]
    pub predictions: PathBuf,
    /// Dataset with the gold annotations.
    #[arg(long, short)]
    pub dataset: PathBuf,
    /// Also write the report as JSON to this file.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Cut-offs for the ranked-instance metrics, comma separated.
    #[arg(long, env = "COUNTQA_K", default_value = "1,5,10")]
    pub k: String,
    /// Print the JSON report instead of the text tables.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Dataset files to expose; each is named after its file stem.
    #[arg(long, short)]
    pub dataset: Vec<PathBuf>,
    #[arg(long, env = "COUNTQA_HOST")]
    pub host: Option<String>,
    #[arg(long, env = "COUNTQA_PORT")]
    pub port: Option<u16>,
    /// Allowed CORS origin; repeat for several. Any origin when none given.
    #[arg(long = "cors-origin", env = "COUNTQA_CORS_ORIGINS", value_delimiter = ',')]
    pub cors_origins: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub dataset: PathBuf,
}

/// Pipeline settings shared by `answer` and `serve`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML or JSON file with defaults for any of these settings.
    #[arg(long, env = "COUNTQA_CONFIG")]
    pub config: Option<PathBuf>,
    /// Minimum span confidence for count inference, in [0, 1].
    #[arg(long, env = "COUNTQA_THETA_INFERENCE")]
    pub theta_inference: Option<f64>,
    /// Minimum span confidence for instance harvesting, in [0, 1].
    #[arg(long, env = "COUNTQA_THETA_EXPLANATION")]
    pub theta_explanation: Option<f64>,
    /// Relative width of the synonym interval around the count, in [0, 1].
    #[arg(long, env = "COUNTQA_ALPHA")]
    pub alpha: Option<f64>,
    /// most-confident, most-frequent, median or weighted-median.
    #[arg(long, env = "COUNTQA_STRATEGY_COUNT")]
    pub strategy_count: Option<CountStrategy>,
    /// no-consolidation, context-frequency, summed-confidence or type-compatibility.
    #[arg(long, env = "COUNTQA_STRATEGY_INSTANCE")]
    pub strategy_instance: Option<InstanceStrategy>,
    #[command(flatten)]
    pub bindings: BindingArgs,
    /// Record/replay cache for provider outputs.
    #[arg(long, env = "COUNTQA_CACHE")]
    pub cache: Option<PathBuf>,
    #[arg(long, env = "COUNTQA_CACHE_MODE", value_enum)]
    pub cache_mode: Option<CacheModeArg>,
    /// Timeout for remote provider calls, in milliseconds.
    #[arg(long, env = "COUNTQA_TIMEOUT_MS")]
    pub timeout_ms: Option<u64>,
    /// Retries for remote provider calls.
    #[arg(long, env = "COUNTQA_RETRIES")]
    pub retries: Option<u32>,
}

/// Provider bindings: `lexical`, `none`, or an http:// endpoint.
#[derive(Debug, Clone, Default, Args)]
pub struct BindingArgs {
    #[arg(long, env = "COUNTQA_SPAN_PREDICTOR", value_name = "BINDING")]
    pub span_predictor: Option<String>,
    /// Span predictor for the explanation stage; the main one when unset.
    #[arg(long, env = "COUNTQA_EXPLANATION_SPAN_PREDICTOR", value_name = "BINDING")]
    pub explanation_span_predictor: Option<String>,
    #[arg(long, env = "COUNTQA_SIMILARITY", value_name = "BINDING")]
    pub similarity: Option<String>,
    #[arg(long, env = "COUNTQA_ENTITY_RECOGNIZER", value_name = "BINDING")]
    pub entity_recognizer: Option<String>,
    #[arg(long, env = "COUNTQA_ENTAILMENT", value_name = "BINDING")]
    pub entailment: Option<String>,
    #[arg(long, env = "COUNTQA_POS_TAGGER", value_name = "BINDING")]
    pub pos_tagger: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheModeArg {
    Record,
    Replay,
}
