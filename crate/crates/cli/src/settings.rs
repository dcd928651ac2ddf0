//! Merges flags, environment and config file into one set of settings.
//!
//! clap already folds COUNTQA_* variables into the flag values, so a
//! field left `None` by clap falls back to the config file and then to
//! the built-in default.

use std::path::{Path, PathBuf};
use std::time::Duration;

use countqa_core::model::{CountStrategy, InstanceStrategy};
use countqa_core::pipeline::{ConfigOverrides, RunConfig};
use countqa_core::providers::cache::CacheMode;
use countqa_remote::RemoteOptions;
use serde::Deserialize;

use crate::args::{BindingArgs, CacheModeArg, RunArgs};
use crate::CliError;

pub const DEFAULT_HOST: &str = "127.0.0.1";
pub const DEFAULT_PORT: u16 = 8080;

/// Contents of a --config file. Keys mirror the long flag names with
/// underscores.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub theta_inference: Option<f64>,
    pub theta_explanation: Option<f64>,
    pub alpha: Option<f64>,
    pub strategy_count: Option<CountStrategy>,
    pub strategy_instance: Option<InstanceStrategy>,
    pub span_predictor: Option<String>,
    pub explanation_span_predictor: Option<String>,
    pub similarity: Option<String>,
    pub entity_recognizer: Option<String>,
    pub entailment: Option<String>,
    pub pos_tagger: Option<String>,
    pub cache: Option<PathBuf>,
    pub cache_mode: Option<CacheModeArg>,
    pub timeout_ms: Option<u64>,
    pub retries: Option<u32>,
    pub jobs: Option<usize>,
    pub host: Option<String>,
    pub port: Option<u16>,
    pub cors_origins: Option<Vec<String>>,
}

impl FileConfig {
    /// Parses JSON when the extension is `.json`, TOML otherwise. A
    /// relative cache path is taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut config: FileConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        }
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        if let (Some(cache), Some(dir)) = (&config.cache, path.parent()) {
            if cache.is_relative() {
                config.cache = Some(dir.join(cache));
            }
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    Lexical,
    Unbound,
    Remote(String),
}

impl std::str::FromStr for Binding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "lexical" => Ok(Binding::Lexical),
            "none" => Ok(Binding::Unbound),
            url if url.starts_with("http://") => Ok(Binding::Remote(url.to_string())),
            other => Err(format!(
                "`{other}` is not a provider binding; use lexical, none or an http:// URL"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bindings {
    pub span_predictor: Binding,
    /// `None` reuses the main span predictor.
    pub explanation_span_predictor: Option<Binding>,
    pub similarity: Binding,
    pub entity_recognizer: Binding,
    pub entailment: Binding,
    pub pos_tagger: Binding,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub run: RunConfig,
    pub bindings: Bindings,
    pub cache: Option<(PathBuf, CacheMode)>,
    pub remote: RemoteOptions,
    pub file: FileConfig,
}

fn binding(flag: &str, cli: &Option<String>, file: &Option<String>) -> Result<Option<Binding>, CliError> {
    cli.as_ref()
        .or(file.as_ref())
        .map(|s| s.parse().map_err(|e| CliError::Usage(format!("--{flag}: {e}"))))
        .transpose()
}

fn bindings(cli: &BindingArgs, file: &FileConfig) -> Result<Bindings, CliError> {
    let lexical = |b: Option<Binding>| b.unwrap_or(Binding::Lexical);
    Ok(Bindings {
        span_predictor: lexical(binding("span-predictor", &cli.span_predictor, &file.span_predictor)?),
        explanation_span_predictor: binding(
            "explanation-span-predictor",
            &cli.explanation_span_predictor,
            &file.explanation_span_predictor,
        )?,
        similarity: lexical(binding("similarity", &cli.similarity, &file.similarity)?),
        entity_recognizer: lexical(binding(
            "entity-recognizer",
            &cli.entity_recognizer,
            &file.entity_recognizer,
        )?),
        entailment: lexical(binding("entailment", &cli.entailment, &file.entailment)?),
        pos_tagger: lexical(binding("pos-tagger", &cli.pos_tagger, &file.pos_tagger)?),
    })
}

impl Settings {
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::merge(args, file)
    }

    pub fn merge(args: &RunArgs, file: FileConfig) -> Result<Self, CliError> {
        let from_file = ConfigOverrides {
            theta_inference: file.theta_inference,
            theta_explanation: file.theta_explanation,
            alpha: file.alpha,
            strategy_count: file.strategy_count,
            strategy_instance: file.strategy_instance,
        };
        let from_cli = ConfigOverrides {
            theta_inference: args.theta_inference,
            theta_explanation: args.theta_explanation,
            alpha: args.alpha,
            strategy_count: args.strategy_count,
            strategy_instance: args.strategy_instance,
        };
        let run = from_file
            .merge(from_cli)
            .apply(&RunConfig::default())
            .map_err(|e| CliError::Usage(e.to_string()))?;

        let mode = match args.cache_mode.or(file.cache_mode) {
            Some(CacheModeArg::Replay) => CacheMode::Replay,
            Some(CacheModeArg::Record) | None => CacheMode::Record,
        };
        let cache = args.cache.clone().or_else(|| file.cache.clone()).map(|p| (p, mode));
        if cache.is_none() && args.cache_mode.is_some() {
            return Err(CliError::Usage("--cache-mode needs --cache".into()));
        }

        let defaults = RemoteOptions::default();
        let remote = RemoteOptions {
            timeout: args
                .timeout_ms
                .or(file.timeout_ms)
                .map(Duration::from_millis)
                .unwrap_or(defaults.timeout),
            retries: args.retries.or(file.retries).unwrap_or(defaults.retries),
            backoff: defaults.backoff,
        };

        Ok(Settings {
            run,
            bindings: bindings(&args.bindings, &file)?,
            cache,
            remote,
            file,
        })
    }
}
