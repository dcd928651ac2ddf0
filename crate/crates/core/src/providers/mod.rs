//! Contracts for the model-backed functions the engine consumes.
//!
//! Every provider is `Send + Sync` so pipelines can fan out across threads.
//! [`lexical`] ships deterministic reference implementations and [`cache`]
//! a record/replay layer that works with any implementation.

pub mod cache;
pub mod lexical;
pub mod text;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    SpanPredictor,
    Similarity,
    EntityRecognizer,
    Entailment,
    PosTagger,
}

impl ProviderKind {
    pub const ALL: [ProviderKind; 5] = [
        ProviderKind::SpanPredictor,
        ProviderKind::Similarity,
        ProviderKind::EntityRecognizer,
        ProviderKind::Entailment,
        ProviderKind::PosTagger,
    ];

    /// Wire name used by the remote protocol and the replay cache.
    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::SpanPredictor => "span_predictor",
            ProviderKind::Similarity => "similarity",
            ProviderKind::EntityRecognizer => "entity_recognizer",
            ProviderKind::Entailment => "entailment",
            ProviderKind::PosTagger => "pos_tagger",
        }
    }
}

impl std::fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Names one bound implementation. `endpoint` is set for remote adapters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderDescriptor {
    pub kind: ProviderKind,
    pub name: String,
    pub endpoint: Option<String>,
}

/// Failures of a provider call. "No span" is not an error; it is `Ok(None)`.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderError {
    #[error("{kind}: invalid input: {message}")]
    InvalidInput { kind: ProviderKind, message: String },

    #[error("{kind}: transport error: {message}")]
    Transport { kind: ProviderKind, message: String },

    #[error("{kind}: request timed out")]
    Timeout { kind: ProviderKind },

    /// The provider answered, but the answer breaks the contract.
    #[error("{kind}: bad response: {message}")]
    Protocol { kind: ProviderKind, message: String },

    /// The remote model reported a failure for this item.
    #[error("{kind}: provider failed: {message}")]
    Remote { kind: ProviderKind, message: String },

    #[error("{kind}: no recorded output for input {input_hash}")]
    ReplayMiss { kind: ProviderKind, input_hash: String },

    #[error("{kind}: cache error: {message}")]
    Cache { kind: ProviderKind, message: String },
}

impl ProviderError {
    pub fn kind(&self) -> ProviderKind {
        match self {
            ProviderError::InvalidInput { kind, .. }
            | ProviderError::Transport { kind, .. }
            | ProviderError::Timeout { kind }
            | ProviderError::Protocol { kind, .. }
            | ProviderError::Remote { kind, .. }
            | ProviderError::ReplayMiss { kind, .. }
            | ProviderError::Cache { kind, .. } => *kind,
        }
    }

    pub(crate) fn invalid(kind: ProviderKind, message: impl Into<String>) -> Self {
        ProviderError::InvalidInput {
            kind,
            message: message.into(),
        }
    }
}

pub type ProviderResult<T> = std::result::Result<T, ProviderError>;

/// A span predicted by an extractive reader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedSpan {
    pub span: String,
    pub confidence: f64,
}

pub trait SpanPredictor: Send + Sync {
    fn name(&self) -> &str;

    /// Returns a contiguous substring of `segment_text` with a confidence in
    /// [0, 1], or `None` when the reader finds no answer.
    fn predict_span(&self, query: &str, segment_text: &str) -> ProviderResult<Option<PredictedSpan>>;
}

pub trait Similarity: Send + Sync {
    fn name(&self) -> &str;

    /// Symmetric score in [-1, 1]; `similarity(x, x) == 1`.
    fn similarity(&self, a: &str, b: &str) -> ProviderResult<f64>;
}

pub trait EntityRecognizer: Send + Sync {
    fn name(&self) -> &str;

    /// Entity mentions in reading order.
    fn recognize(&self, text: &str) -> ProviderResult<Vec<String>>;
}

pub trait Entailment: Send + Sync {
    fn name(&self) -> &str;

    /// Probability in [0, 1] that `premise` entails `hypothesis`.
    fn entail(&self, premise: &str, hypothesis: &str) -> ProviderResult<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosTag {
    Noun,
    ProperNoun,
    Adjective,
    Verb,
    Auxiliary,
    Determiner,
    Pronoun,
    Conjunction,
    Adposition,
    Number,
    Punctuation,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub text: String,
    pub tag: PosTag,
}

pub trait PosTagger: Send + Sync {
    fn name(&self) -> &str;

    fn tag(&self, text: &str) -> ProviderResult<Vec<TaggedToken>>;
}

pub(crate) fn require_non_empty(kind: ProviderKind, field: &str, value: &str) -> ProviderResult<()> {
    if value.trim().is_empty() {
        Err(ProviderError::invalid(kind, format!("{field} is empty")))
    } else {
        Ok(())
    }
}

/// Checks a provider's span answer against the contract.
pub fn validate_span(kind: ProviderKind, segment_text: &str, predicted: &PredictedSpan) -> ProviderResult<()> {
    if !(0.0..=1.0).contains(&predicted.confidence) {
        return Err(ProviderError::Protocol {
            kind,
            message: format!("confidence {} outside [0, 1]", predicted.confidence),
        });
    }
    if !segment_text.contains(&predicted.span) {
        return Err(ProviderError::Protocol {
            kind,
            message: format!("span `{}` is not a substring of the segment", predicted.span),
        });
    }
    Ok(())
}

/// Checks a probability-like score.
pub fn validate_unit_score(kind: ProviderKind, value: f64, lo: f64) -> ProviderResult<f64> {
    if value.is_finite() && (lo..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ProviderError::Protocol {
            kind,
            message: format!("score {value} outside [{lo}, 1]"),
        })
    }
}
