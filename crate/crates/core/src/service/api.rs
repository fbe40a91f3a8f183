use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{live_agreement, live_disagreements, AnnotationStore, StoreError};
use crate::autocoder::{code_email, Lexicons, Recipient};
use crate::campaigns::{campaign_report, cluster_multilayer, CorpusIndex, Matcher};
use crate::codebook::{write_coded_csv, write_coded_jsonl, Code, CodedEmail, Violation};
use crate::jsonl::write_jsonl;

/// Shared handler state. Mutations take the write lock one at a time;
/// reads copy what they need and compute after releasing it.
#[derive(Clone)]
pub struct AppState {
    pub store: Arc<RwLock<AnnotationStore>>,
    pub lexicons: Arc<Lexicons>,
    pub recipient: Recipient,
}

impl AppState {
    pub fn new(store: AnnotationStore, lexicons: Lexicons, recipient: Recipient) -> Self {
        AppState { store: Arc::new(RwLock::new(store)), lexicons: Arc::new(lexicons), recipient }
    }
}

/// Body of every error response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub violations: Vec<Violation>,
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { code: code.into(), message: message.into(), violations: Vec::new() } }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::UnknownCoder(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_coder", message),
            StoreError::UnknownEmail(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_email", message),
            StoreError::Invalid(violations) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: ErrorBody { code: "invalid_annotation".into(), message, violations },
            },
            StoreError::Journal { .. } | StoreError::CorruptJournal { .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "journal", message)
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn read(state: &AppState) -> std::sync::RwLockReadGuard<'_, AnnotationStore> {
    state.store.read().unwrap_or_else(|p| p.into_inner())
}

/// The coder behind the `Authorization: Bearer <token>` header.
fn authenticate(state: &AppState, headers: &HeaderMap) -> ApiResult<String> {
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing bearer token"))?;
    read(state)
        .coder_for_token(token.trim())
        .map(str::to_string)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "unknown token"))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/emails/next", get(next_email))
        .route("/api/annotations", post(submit))
        .route("/api/agreement", get(agreement))
        .route("/api/disagreements", get(disagreement_log))
        .route("/api/export", get(export))
        .route("/api/schema", get(schema))
        .route("/api/clusters", get(clusters))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Deserialize)]
struct CoderParam {
    coder: Option<String>,
}

async fn next_email(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<CoderParam>,
) -> ApiResult<Json<serde_json::Value>> {
    let me = authenticate(&state, &headers)?;
    let coder = q.coder.unwrap_or_else(|| me.clone());
    if coder != me {
        return Err(ApiError::new(
            StatusCode::FORBIDDEN,
            "forbidden",
            format!("token does not belong to coder {coder:?}"),
        ));
    }
    let (record, remaining) = {
        let store = read(&state);
        let record = store.next_email(&coder)?.cloned();
        let done = store.annotations().filter(|a| a.coder == coder).count();
        (record, store.records().count() - done)
    };
    let Some(mut record) = record else {
        return Ok(Json(json!({ "status": "exhausted", "coder": coder })));
    };
    let lex = state.lexicons.clone();
    let schema = read(&state).schema().clone();
    let suggestions = code_email(&record, &lex, &schema, &state.recipient);
    // the workbench renders text only
    record.body_html = None;
    Ok(Json(
        json!({ "status": "assigned", "coder": coder, "remaining": remaining, "email": record, "suggestions": suggestions }),
    ))
}

async fn submit(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let me = authenticate(&state, &headers)?;
    let coded: CodedEmail = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", format!("invalid annotation body: {e}")))?;
    let stored = state.store.write().unwrap_or_else(|p| p.into_inner()).submit(&me, &coded)?;
    Ok((StatusCode::OK, Json(stored)).into_response())
}

#[derive(Deserialize)]
struct PairParams {
    a: String,
    b: String,
}

async fn agreement(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<PairParams>,
) -> ApiResult<Response> {
    authenticate(&state, &headers)?;
    let (a, b) = read(&state).annotation_sets(&q.a, &q.b)?;
    Ok(Json(live_agreement(&a, &b)).into_response())
}

async fn disagreement_log(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<PairParams>,
) -> ApiResult<Response> {
    authenticate(&state, &headers)?;
    let (a, b) = read(&state).annotation_sets(&q.a, &q.b)?;
    Ok(Json(live_disagreements(&a, &b)).into_response())
}

#[derive(Deserialize)]
struct ExportParams {
    format: String,
    coder: Option<String>,
}

/// `csv` needs a coder and yields the coded-file format the batch tools
/// read; `jsonl` yields that coder's coded records, or every stored
/// annotation with coder and timestamp when no coder is given.
async fn export(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<ExportParams>,
) -> ApiResult<Response> {
    authenticate(&state, &headers)?;
    let mut buf = Vec::new();
    let content_type = match (q.format.as_str(), &q.coder) {
        ("csv", Some(coder)) => {
            let coded = read(&state).coded_by(coder)?;
            write_coded_csv(&mut buf, &coded).map_err(internal)?;
            "text/csv; charset=utf-8"
        }
        ("csv", None) => return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "csv export needs a coder")),
        ("jsonl", Some(coder)) => {
            let coded = read(&state).coded_by(coder)?;
            write_coded_jsonl(&mut buf, &coded).map_err(internal)?;
            "application/x-ndjson"
        }
        ("jsonl", None) => {
            let all: Vec<_> = read(&state).annotations().cloned().collect();
            write_jsonl(&mut buf, &all).map_err(internal)?;
            "application/x-ndjson"
        }
        (other, _) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "bad_request",
                format!("unknown export format {other:?}"),
            ))
        }
    };
    Ok(([(header::CONTENT_TYPE, content_type)], buf).into_response())
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
}

async fn schema(State(state): State<AppState>) -> Json<serde_json::Value> {
    let schema = read(&state).schema().clone();
    let codes: Vec<_> = Code::ALL
        .iter()
        .map(|&c| {
            json!({
                "key": c.key(),
                "title": c.title(),
                "multi_valued": c.is_multi_valued(),
                "vocabulary": schema.vocabulary(c),
            })
        })
        .collect();
    Json(json!({ "codes": codes, "schema": schema }))
}

#[derive(Deserialize)]
struct ClusterParams {
    matcher: Option<String>,
    coder: Option<String>,
    min_size: Option<usize>,
}

/// Campaign clusters over one coder's annotations, or over the latest
/// annotation of each email.
async fn clusters(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<ClusterParams>,
) -> ApiResult<Response> {
    authenticate(&state, &headers)?;
    let matcher: Matcher = q
        .matcher
        .as_deref()
        .unwrap_or("exact")
        .parse()
        .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e))?;
    let (coded, records) = {
        let store = read(&state);
        let coded = match &q.coder {
            Some(c) => store.coded_by(c)?,
            None => store.latest_per_email(),
        };
        let records: Vec<_> = coded.iter().filter_map(|c| store.email(&c.email_id).cloned()).collect();
        (coded, records)
    };
    let clustering = cluster_multilayer(&coded, matcher);
    let report = campaign_report(&clustering, &CorpusIndex::new(&records, &coded), q.min_size.unwrap_or(2), false)
        .map_err(internal)?;
    Ok(Json(report).into_response())
}
