//! Serves a survey plan over HTTP and records answers in a response store.
//!
//! Pair views carry opaque image references only; which side is synthetic
//! never leaves the server, and answers are acknowledged without feedback.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use echoaug::survey::{summarize, Group, RecordError, ResponseStore, Submission, SurveyPlan};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub struct AppState {
    pub plan: SurveyPlan,
    pub store: ResponseStore,
    /// Directory holding the plan's images as `<id>.png` or `<id>_img.png`.
    pub images: PathBuf,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PairView {
    pub index: usize,
    pub total: usize,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Progress {
    pub participant_id: String,
    pub answered: usize,
    pub total: usize,
    /// First unanswered pair; absent once the survey is complete.
    pub next: Option<usize>,
    pub complete: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Registration {
    pub participant_id: String,
    pub group: Group,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Ack {
    pub stored: bool,
    pub progress: Progress,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

fn fail(status: StatusCode, msg: impl ToString) -> Response {
    (status, Json(ErrorBody { error: msg.to_string() })).into_response()
}

fn record_status(e: &RecordError) -> StatusCode {
    match e {
        RecordError::Duplicate { .. } | RecordError::GroupConflict(_) => StatusCode::CONFLICT,
        RecordError::UnknownPair(_) | RecordError::UnknownParticipant(_) => StatusCode::NOT_FOUND,
        RecordError::MissingExplanation | RecordError::EmptyParticipant => StatusCode::UNPROCESSABLE_ENTITY,
        RecordError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

/// Opaque reference for one side of a pair.
pub fn image_ref(index: usize, left: bool) -> String {
    format!("{index}{}", if left { 'a' } else { 'b' })
}

fn resolve_ref(plan: &SurveyPlan, reference: &str) -> Option<String> {
    let (digits, side) = reference.split_at(reference.len().checked_sub(1)?);
    let pair = plan.get(digits.parse().ok()?)?;
    match side {
        "a" => Some(pair.left_id.clone()),
        "b" => Some(pair.right_id.clone()),
        _ => None,
    }
}

fn image_path(dir: &Path, id: &str) -> Option<PathBuf> {
    [format!("{id}.png"), format!("{id}{}", echoaug::io::IMAGE_SUFFIX), id.to_string()]
        .into_iter()
        .map(|name| dir.join(name))
        .find(|p| p.is_file())
}

fn progress(state: &AppState, participant: &str) -> Progress {
    let snap = state.store.snapshot();
    let next = snap.next_unanswered(participant, state.plan.len());
    Progress {
        participant_id: participant.to_string(),
        answered: snap.answered_count(participant),
        total: state.plan.len(),
        next,
        complete: next.is_none(),
    }
}

async fn pair(State(state): State<Arc<AppState>>, UrlPath(index): UrlPath<usize>) -> Response {
    if state.plan.get(index).is_none() {
        return fail(StatusCode::NOT_FOUND, format!("no pair {index}"));
    }
    Json(PairView {
        index,
        total: state.plan.len(),
        left: format!("/api/image/{}", image_ref(index, true)),
        right: format!("/api/image/{}", image_ref(index, false)),
    })
    .into_response()
}

async fn image(State(state): State<Arc<AppState>>, UrlPath(reference): UrlPath<String>) -> Response {
    let Some(path) = resolve_ref(&state.plan, &reference).and_then(|id| image_path(&state.images, &id)) else {
        return fail(StatusCode::NOT_FOUND, format!("no image {reference}"));
    };
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "image/png")], bytes).into_response(),
        Err(e) => fail(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn register(State(state): State<Arc<AppState>>, Json(reg): Json<Registration>) -> Response {
    let s = Arc::clone(&state);
    let id = reg.participant_id.clone();
    match tokio::task::spawn_blocking(move || s.store.register(&reg.participant_id, reg.group)).await {
        Ok(Ok(())) => Json(progress(&state, &id)).into_response(),
        Ok(Err(e)) => fail(record_status(&e), e),
        Err(e) => fail(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn respond(State(state): State<Arc<AppState>>, Json(sub): Json<Submission>) -> Response {
    let s = Arc::clone(&state);
    let id = sub.participant_id.clone();
    match tokio::task::spawn_blocking(move || s.store.record(sub)).await {
        Ok(Ok(_)) => Json(Ack {
            stored: true,
            progress: progress(&state, &id),
        })
        .into_response(),
        Ok(Err(e)) => fail(record_status(&e), e),
        Err(e) => fail(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn participant_progress(State(state): State<Arc<AppState>>, UrlPath(participant): UrlPath<String>) -> Response {
    if !state.store.snapshot().participants.contains_key(&participant) {
        return fail(StatusCode::NOT_FOUND, format!("participant {participant} is not registered"));
    }
    Json(progress(&state, &participant)).into_response()
}

async fn summary(State(state): State<Arc<AppState>>) -> Response {
    let snap = state.store.snapshot();
    Json(summarize(&snap.responses, &state.plan)).into_response()
}

/// API routes, plus the UI bundle from `static_dir` for every other path.
pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/pair/{index}", get(pair))
        .route("/api/image/{id}", get(image))
        .route("/api/register", post(register))
        .route("/api/response", post(respond))
        .route("/api/progress/{participant}", get(participant_progress))
        .route("/api/summary", get(summary))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(state: Arc<AppState>, static_dir: Option<&Path>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("survey listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, static_dir)).await
}
