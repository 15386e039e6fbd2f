//! HTTP JSON API over [`attnfov::study::SessionManager`].
//!
//! | method | path | |
//! |---|---|---|
//! | `POST` | `/sessions` | create a session |
//! | `GET` | `/sessions` | list sessions |
//! | `GET` | `/sessions/{id}` | session summary |
//! | `GET` | `/sessions/{id}/next-trial` | issue or re-send the active trial |
//! | `POST` | `/sessions/{id}/responses` | submit answers for a trial |
//! | `GET` | `/sessions/{id}/results` | thresholds so far; `?format=csv` for the fitting schema |
//! | `GET` | `/sessions/{id}/trials/{trial_id}/stimulus.png` | rendered frame of the active trial |

mod config;
mod error;

use std::sync::Arc;

use attnfov::study::{
    JsonlStore, Phase, ResponseOutcome, ResponseSubmission, SessionManager, SessionResults, SessionSummary,
    StudyConfig, StudyKind, SystemClock, TrialDescriptor, render_trial,
};
use attnfov::DisplayGeometry;
use axum::extract::{Path, Query, State};
use axum::http::{StatusCode, header};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

pub use config::{DATA_DIR_ENV, ServiceConfig};
pub use error::ApiError;

pub struct AppState {
    pub manager: SessionManager,
    pub display: DisplayGeometry,
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub subject_id: String,
    /// Study with default conditions; ignored when `config` is present.
    #[serde(default)]
    pub kind: Option<StudyKind>,
    #[serde(default)]
    pub config: Option<StudyConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextTrial {
    pub trial: TrialDescriptor,
    pub stimulus_url: String,
    pub phase: Phase,
    pub server_time_ms: u64,
}

#[derive(Debug, Deserialize)]
struct ResultsQuery {
    format: Option<String>,
}

/// Runs blocking manager work (locks, fsync, rendering) off the reactor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> attnfov::Result<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(attnfov::Error::InvalidParameter(format!("worker failed: {e}"))))?
        .map_err(ApiError)
}

async fn create_session(State(st): State<Shared>, Json(req): Json<CreateSession>) -> ApiResult<Response> {
    let config = req.config.unwrap_or_else(|| match req.kind.unwrap_or(StudyKind::Csf) {
        StudyKind::Csf => StudyConfig::csf(),
        StudyKind::Foveation => StudyConfig::foveation(),
    });
    let summary = blocking(move || st.manager.create_session(&req.subject_id, config)).await?;
    log::info!("created session {} for {}", summary.session_id, summary.subject_id);
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn list_sessions(State(st): State<Shared>) -> ApiResult<Json<Vec<SessionSummary>>> {
    let ids = st.manager.session_ids();
    let out = ids
        .iter()
        .map(|id| st.manager.summary(id))
        .collect::<attnfov::Result<_>>()?;
    Ok(Json(out))
}

async fn session_summary(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<SessionSummary>> {
    Ok(Json(st.manager.summary(&id)?))
}

async fn next_trial(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<NextTrial>> {
    let (trial, now) = blocking({
        let st = st.clone();
        let id = id.clone();
        move || Ok((st.manager.next_trial(&id)?, st.manager.now_ms()))
    })
    .await?;
    Ok(Json(NextTrial {
        stimulus_url: format!("/sessions/{id}/trials/{}/stimulus.png", trial.trial_id),
        phase: trial.phase_at(now),
        server_time_ms: now,
        trial,
    }))
}

async fn submit_response(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Json(sub): Json<ResponseSubmission>,
) -> ApiResult<Json<ResponseOutcome>> {
    Ok(Json(blocking(move || st.manager.submit_response(&id, &sub)).await?))
}

async fn results(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ResultsQuery>,
) -> ApiResult<Response> {
    let results: SessionResults = st.manager.results(&id)?;
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(results).into_response()),
        Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv")], results.to_csv()?).into_response()),
        Some(other) => Err(ApiError(attnfov::Error::InvalidParameter(format!(
            "unknown results format {other:?}"
        )))),
    }
}

async fn stimulus_png(State(st): State<Shared>, Path((id, trial_id)): Path<(String, String)>) -> ApiResult<Response> {
    let png = blocking(move || {
        let session = st.manager.snapshot(&id)?;
        let trial = session
            .active_trial()
            .filter(|t| t.trial_id == trial_id)
            .ok_or_else(|| attnfov::Error::StaleTrial {
                got: trial_id.clone(),
                active: session.active_trial().map(|t| t.trial_id.clone()),
            })?;
        render_trial(trial, &st.display)?.png_bytes()
    })
    .await?;
    Ok((
        [(header::CONTENT_TYPE, "image/png"), (header::CACHE_CONTROL, "private, max-age=3600")],
        png,
    )
        .into_response())
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(session_summary))
        .route("/sessions/{id}/next-trial", get(next_trial))
        .route("/sessions/{id}/responses", post(submit_response))
        .route("/sessions/{id}/results", get(results))
        .route("/sessions/{id}/trials/{trial_id}/stimulus.png", get(stimulus_png))
        .with_state(state)
}

/// Opens the store under `config.data_dir`, replays every session and
/// returns the shared state.
pub fn open_state(config: &ServiceConfig) -> anyhow::Result<Shared> {
    let store = Arc::new(JsonlStore::open(&config.data_dir)?);
    let manager = SessionManager::recover(store, Arc::new(SystemClock))?;
    Ok(Arc::new(AppState {
        manager,
        display: config.display,
    }))
}

/// Serves until ctrl-c.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let state = open_state(&config)?;
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    log::info!(
        "listening on {} with data in {}",
        listener.local_addr()?,
        config.data_dir.display()
    );
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
