//! HTTP service over the count-answering pipeline.
//!
//! | method | path | body / result |
//! |---|---|---|
//! | POST | `/answer` | [`AnswerRequest`] → prediction record |
//! | GET | `/datasets` | loaded datasets |
//! | GET | `/datasets/{id}/queries` | query listing of one dataset |
//! | GET | `/health` | version, bound providers, default config |
//!
//! Requests are stateless: overrides apply to one request only.

use std::collections::BTreeMap;
use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use countqa_core::dataset::{validate_segments, DatasetRecord, PredictionRecord};
use countqa_core::model::TextSegment;
use countqa_core::pipeline::{answer_query, ConfigOverrides, ProviderSet, RunConfig};
use countqa_core::providers::ProviderDescriptor;
use countqa_core::Error;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Query id given to answers over ad-hoc segments.
pub const ADHOC_QUERY_ID: &str = "adhoc";

#[derive(Debug, Clone)]
pub struct Dataset {
    pub id: String,
    pub source: String,
    pub records: Vec<DatasetRecord>,
}

#[derive(Debug, Clone, Default)]
pub struct ServerOptions {
    /// Allowed CORS origins; empty allows any origin.
    pub cors_origins: Vec<String>,
}

pub struct AppState {
    pub datasets: Vec<Dataset>,
    pub providers: ProviderSet,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRequest {
    /// Required with `segments`; replaces the stored query text when given
    /// with `dataset_query_id`.
    #[serde(default)]
    pub query: Option<String>,
    #[serde(default)]
    pub segments: Option<Vec<TextSegment>>,
    #[serde(default)]
    pub dataset_query_id: Option<String>,
    /// Disambiguates `dataset_query_id` when several datasets hold it.
    #[serde(default)]
    pub dataset: Option<String>,
    #[serde(default)]
    pub overrides: Option<ConfigOverrides>,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// Body of a 502. `partial` is set when inference succeeded and only the
/// explanation stage lost its provider; `result` then holds what was
/// computed.
#[derive(Debug, Serialize)]
pub struct ProviderFailure {
    pub error: String,
    pub partial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Box<PredictionRecord>>,
}

#[derive(Debug, Serialize)]
pub struct DatasetSummary {
    pub id: String,
    pub source: String,
    pub queries: usize,
}

#[derive(Debug, Serialize)]
pub struct QuerySummary {
    pub id: String,
    pub query: String,
    pub gold_count: Option<f64>,
    pub segments: usize,
}

#[derive(Debug, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub version: &'static str,
    pub providers: Vec<ProviderDescriptor>,
    pub config: RunConfig,
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest { message: String, path: Option<String> },
    NotFound(String),
    Provider(ProviderFailure),
    Internal(String),
}

impl ApiError {
    fn bad(message: impl Into<String>, path: Option<&str>) -> Self {
        ApiError::BadRequest {
            message: message.into(),
            path: path.map(str::to_string),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Contract(_) | Error::MissingProvider(_) => {
                ApiError::bad(e.to_string(), None)
            }
            Error::Provider(_) => ApiError::Provider(ProviderFailure {
                error: e.to_string(),
                partial: false,
                result: None,
            }),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::BadRequest { message, path } => {
                (StatusCode::BAD_REQUEST, Json(ErrorBody { error: message, path })).into_response()
            }
            ApiError::NotFound(message) => (
                StatusCode::NOT_FOUND,
                Json(ErrorBody {
                    error: message,
                    path: None,
                }),
            )
                .into_response(),
            ApiError::Provider(body) => (StatusCode::BAD_GATEWAY, Json(body)).into_response(),
            ApiError::Internal(message) => {
                tracing::error!(%message, "internal error");
                (
                    StatusCode::INTERNAL_SERVER_ERROR,
                    Json(ErrorBody {
                        error: message,
                        path: None,
                    }),
                )
                    .into_response()
            }
        }
    }
}

pub fn router(state: AppState, options: &ServerOptions) -> Router {
    let origins = if options.cors_origins.is_empty() {
        AllowOrigin::from(Any)
    } else {
        AllowOrigin::list(
            options
                .cors_origins
                .iter()
                .filter_map(|o| HeaderValue::from_str(o).ok()),
        )
    };
    let cors = CorsLayer::new()
        .allow_origin(origins)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers(Any);
    Router::new()
        .route("/answer", post(answer))
        .route("/datasets", get(list_datasets))
        .route("/datasets/{id}/queries", get(list_queries))
        .route("/health", get(health))
        .layer(cors)
        .with_state(Arc::new(state))
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok",
        version: VERSION,
        providers: state.providers.descriptors(),
        config: state.config,
    })
}

async fn list_datasets(State(state): State<Arc<AppState>>) -> Json<Vec<DatasetSummary>> {
    Json(
        state
            .datasets
            .iter()
            .map(|d| DatasetSummary {
                id: d.id.clone(),
                source: d.source.clone(),
                queries: d.records.len(),
            })
            .collect(),
    )
}

async fn list_queries(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Vec<QuerySummary>>, ApiError> {
    let dataset = state
        .datasets
        .iter()
        .find(|d| d.id == id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown dataset `{id}`")))?;
    Ok(Json(
        dataset
            .records
            .iter()
            .map(|r| QuerySummary {
                id: r.id.clone(),
                query: r.query.clone(),
                gold_count: r.gold_count,
                segments: r.segments.len(),
            })
            .collect(),
    ))
}

fn parse_request(body: &[u8]) -> Result<AnswerRequest, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = (path != ".").then_some(path);
        ApiError::BadRequest {
            message: e.into_inner().to_string(),
            path,
        }
    })
}

struct Job {
    id: String,
    query: String,
    segments: Vec<TextSegment>,
    config: RunConfig,
}

fn resolve(state: &AppState, req: AnswerRequest) -> Result<Job, ApiError> {
    let config = match &req.overrides {
        Some(o) => o
            .apply(&state.config)
            .map_err(|e| ApiError::bad(e.to_string(), Some("overrides")))?,
        None => state.config,
    };
    if let Some(q) = &req.query {
        if q.trim().is_empty() {
            return Err(ApiError::bad("query is empty", Some("query")));
        }
    }
    match (req.segments, req.dataset_query_id) {
        (Some(_), Some(_)) | (None, None) => Err(ApiError::bad(
            "exactly one of `segments` and `dataset_query_id` must be given",
            None,
        )),
        (Some(segments), None) => {
            let query = req
                .query
                .ok_or_else(|| ApiError::bad("`query` is required with `segments`", Some("query")))?;
            validate_segments(&segments).map_err(|m| {
                let (path, message) = m.split_once(": ").unwrap_or(("segments", m.as_str()));
                ApiError::bad(message, Some(path))
            })?;
            Ok(Job {
                id: ADHOC_QUERY_ID.to_string(),
                query,
                segments,
                config,
            })
        }
        (None, Some(id)) => {
            let record = find_record(state, req.dataset.as_deref(), &id)?;
            Ok(Job {
                id: record.id.clone(),
                query: req.query.unwrap_or_else(|| record.query.clone()),
                segments: record.segments.clone(),
                config,
            })
        }
    }
}

fn find_record<'a>(state: &'a AppState, dataset: Option<&str>, id: &str) -> Result<&'a DatasetRecord, ApiError> {
    let datasets: Vec<&Dataset> = match dataset {
        Some(name) => vec![state
            .datasets
            .iter()
            .find(|d| d.id == name)
            .ok_or_else(|| ApiError::NotFound(format!("unknown dataset `{name}`")))?],
        None => state.datasets.iter().collect(),
    };
    let hits: BTreeMap<&str, &DatasetRecord> = datasets
        .iter()
        .filter_map(|d| d.records.iter().find(|r| r.id == id).map(|r| (d.id.as_str(), r)))
        .collect();
    match hits.len() {
        0 => Err(ApiError::NotFound(format!("unknown dataset query id `{id}`"))),
        1 => Ok(hits.into_values().next().expect("one hit")),
        _ => Err(ApiError::bad(
            format!(
                "query id `{id}` exists in datasets {}; name one with `dataset`",
                hits.keys().copied().collect::<Vec<_>>().join(", ")
            ),
            Some("dataset"),
        )),
    }
}

async fn answer(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<PredictionRecord>, ApiError> {
    let req = parse_request(&body)?;
    let job = resolve(&state, req)?;
    let worker = state.clone();
    let output = tokio::task::spawn_blocking(move || {
        answer_query(&job.id, &job.query, &job.segments, &worker.providers, &job.config)
    })
    .await
    .map_err(|e| ApiError::Internal(format!("pipeline task failed: {e}")))??;
    if output.inference_failed {
        return Err(ApiError::Provider(ProviderFailure {
            error: "span prediction failed on every segment during inference".into(),
            partial: false,
            result: None,
        }));
    }
    if output.explanation_failed {
        return Err(ApiError::Provider(ProviderFailure {
            error: "providers failed on every segment during explanation".into(),
            partial: true,
            result: Some(Box::new(output.record)),
        }));
    }
    Ok(Json(output.record))
}
