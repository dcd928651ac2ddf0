//! Remote provider adapter.
//!
//! Each provider kind is served by its own endpoint. A request is
//! `{"kind": "...", "inputs": [...]}` and the server answers
//! `{"outputs": [...]}` with one entry per input, in order. An entry of the
//! form `{"error": "..."}` marks a failed item.
//!
//! Item shapes:
//!
//! | kind | input | output |
//! |---|---|---|
//! | `span_predictor` | `{"query", "segment"}` | `{"span", "confidence"}` or `null` |
//! | `similarity` | `{"a", "b"}` | number in [-1, 1] |
//! | `entity_recognizer` | `{"text"}` | list of strings |
//! | `entailment` | `{"premise", "hypothesis"}` | number in [0, 1] |
//! | `pos_tagger` | `{"text"}` | list of `{"text", "tag"}` |

use std::thread;
use std::time::Duration;

use countqa_core::providers::{
    validate_span, validate_unit_score, Entailment, EntityRecognizer, PosTagger, PredictedSpan, ProviderDescriptor,
    ProviderError, ProviderKind, ProviderResult, Similarity, SpanPredictor, TaggedToken,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use url::Url;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_RETRIES: u32 = 2;
pub const DEFAULT_BACKOFF: Duration = Duration::from_millis(200);

#[derive(Debug, Clone)]
pub struct RemoteOptions {
    /// Per-request timeout, connect included.
    pub timeout: Duration,
    /// Extra attempts after the first one.
    pub retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff: Duration,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        Self {
            timeout: DEFAULT_TIMEOUT,
            retries: DEFAULT_RETRIES,
            backoff: DEFAULT_BACKOFF,
        }
    }
}

#[derive(Serialize)]
struct Request<'a> {
    kind: &'a str,
    inputs: &'a [Value],
}

#[derive(Deserialize)]
struct Response {
    outputs: Vec<Value>,
}

/// A provider of one kind reached over HTTP.
///
/// The type implements every provider trait so it can be bound to any slot,
/// but calling a trait that does not match its kind fails with
/// [`ProviderError::InvalidInput`].
#[derive(Debug, Clone)]
pub struct RemoteProvider {
    kind: ProviderKind,
    endpoint: Url,
    name: String,
    options: RemoteOptions,
    client: reqwest::blocking::Client,
}

impl RemoteProvider {
    pub fn new(kind: ProviderKind, endpoint: &str, options: RemoteOptions) -> ProviderResult<Self> {
        let endpoint = Url::parse(endpoint).map_err(|e| ProviderError::InvalidInput {
            kind,
            message: format!("bad endpoint `{endpoint}`: {e}"),
        })?;
        if endpoint.scheme() != "http" {
            return Err(ProviderError::InvalidInput {
                kind,
                message: format!(
                    "unsupported scheme `{}`; only http endpoints are supported",
                    endpoint.scheme()
                ),
            });
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(options.timeout)
            .connect_timeout(options.timeout)
            .build()
            .map_err(|e| ProviderError::Transport {
                kind,
                message: e.to_string(),
            })?;
        Ok(Self {
            kind,
            name: format!("remote:{endpoint}"),
            endpoint,
            options,
            client,
        })
    }

    pub fn kind(&self) -> ProviderKind {
        self.kind
    }

    pub fn endpoint(&self) -> &Url {
        &self.endpoint
    }

    pub fn descriptor(&self) -> ProviderDescriptor {
        ProviderDescriptor {
            kind: self.kind,
            name: self.name.clone(),
            endpoint: Some(self.endpoint.to_string()),
        }
    }

    /// Sends a batch and returns one result per input. The outer error is a
    /// failure of the whole request; inner errors are per-item failures.
    pub fn call(&self, inputs: &[Value]) -> ProviderResult<Vec<ProviderResult<Value>>> {
        let outputs = self.post_with_retry(inputs)?;
        if outputs.len() != inputs.len() {
            return Err(self.protocol(format!("{} outputs for {} inputs", outputs.len(), inputs.len())));
        }
        Ok(outputs.into_iter().map(|o| self.item(o)).collect())
    }

    fn item(&self, output: Value) -> ProviderResult<Value> {
        if let Value::Object(map) = &output {
            if map.len() == 1 {
                if let Some(err) = map.get("error") {
                    let message = err.as_str().map(str::to_string).unwrap_or_else(|| err.to_string());
                    return Err(ProviderError::Remote {
                        kind: self.kind,
                        message,
                    });
                }
            }
        }
        Ok(output)
    }

    fn post_with_retry(&self, inputs: &[Value]) -> ProviderResult<Vec<Value>> {
        let mut delay = self.options.backoff;
        let mut attempt = 0;
        loop {
            match self.post(inputs) {
                Ok(outputs) => return Ok(outputs),
                Err(e) if attempt < self.options.retries && retryable(&e) => {
                    attempt += 1;
                    thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn post(&self, inputs: &[Value]) -> ProviderResult<Vec<Value>> {
        let body = Request {
            kind: self.kind.as_str(),
            inputs,
        };
        let response = self
            .client
            .post(self.endpoint.clone())
            .json(&body)
            .send()
            .map_err(|e| self.transport(e))?;
        let status = response.status();
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            let message = format!("HTTP {status}: {}", text.trim());
            return Err(if status.is_server_error() {
                ProviderError::Transport {
                    kind: self.kind,
                    message,
                }
            } else {
                self.protocol(message)
            });
        }
        let parsed: Response = response.json().map_err(|e| {
            if e.is_timeout() {
                self.transport(e)
            } else {
                self.protocol(e.to_string())
            }
        })?;
        Ok(parsed.outputs)
    }

    fn transport(&self, e: reqwest::Error) -> ProviderError {
        if e.is_timeout() {
            ProviderError::Timeout { kind: self.kind }
        } else {
            ProviderError::Transport {
                kind: self.kind,
                message: e.to_string(),
            }
        }
    }

    fn protocol(&self, message: impl Into<String>) -> ProviderError {
        ProviderError::Protocol {
            kind: self.kind,
            message: message.into(),
        }
    }

    fn single<T: DeserializeOwned>(&self, expected: ProviderKind, input: Value) -> ProviderResult<T> {
        if expected != self.kind {
            return Err(ProviderError::InvalidInput {
                kind: expected,
                message: format!("endpoint {} is bound as {}", self.endpoint, self.kind),
            });
        }
        let out = self.call(&[input])?.pop().expect("length checked")?;
        serde_json::from_value(out).map_err(|e| self.protocol(format!("malformed output: {e}")))
    }
}

fn retryable(e: &ProviderError) -> bool {
    matches!(e, ProviderError::Transport { .. } | ProviderError::Timeout { .. })
}

fn non_empty(kind: ProviderKind, field: &str, value: &str) -> ProviderResult<()> {
    if value.trim().is_empty() {
        Err(ProviderError::InvalidInput {
            kind,
            message: format!("{field} is empty"),
        })
    } else {
        Ok(())
    }
}

impl SpanPredictor for RemoteProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict_span(&self, query: &str, segment_text: &str) -> ProviderResult<Option<PredictedSpan>> {
        let kind = ProviderKind::SpanPredictor;
        non_empty(kind, "query", query)?;
        non_empty(kind, "segment", segment_text)?;
        let span: Option<PredictedSpan> = self.single(kind, json!({ "query": query, "segment": segment_text }))?;
        if let Some(span) = &span {
            validate_span(kind, segment_text, span)?;
        }
        Ok(span)
    }
}

impl Similarity for RemoteProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn similarity(&self, a: &str, b: &str) -> ProviderResult<f64> {
        let kind = ProviderKind::Similarity;
        non_empty(kind, "a", a)?;
        non_empty(kind, "b", b)?;
        let score: f64 = self.single(kind, json!({ "a": a, "b": b }))?;
        validate_unit_score(kind, score, -1.0)
    }
}

impl EntityRecognizer for RemoteProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn recognize(&self, text: &str) -> ProviderResult<Vec<String>> {
        self.single(ProviderKind::EntityRecognizer, json!({ "text": text }))
    }
}

impl Entailment for RemoteProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn entail(&self, premise: &str, hypothesis: &str) -> ProviderResult<f64> {
        let kind = ProviderKind::Entailment;
        non_empty(kind, "premise", premise)?;
        non_empty(kind, "hypothesis", hypothesis)?;
        let p: f64 = self.single(kind, json!({ "premise": premise, "hypothesis": hypothesis }))?;
        validate_unit_score(kind, p, 0.0)
    }
}

impl PosTagger for RemoteProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn tag(&self, text: &str) -> ProviderResult<Vec<TaggedToken>> {
        self.single(ProviderKind::PosTagger, json!({ "text": text }))
    }
}
