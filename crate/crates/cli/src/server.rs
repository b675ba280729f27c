//! HTTP/JSON session service.

use std::collections::HashMap;
use std::sync::Arc;

use autotrain_core::output::RenderedOutput;
use autotrain_core::session::{Engine, Exchange, Phase, SessionOverrides, SessionState};
use autotrain_core::Error;
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};
use tower_http::cors::CorsLayer;

use crate::ErrorBody;

/// Sessions are locked individually so one slow utterance never blocks
/// another session.
#[derive(Clone)]
pub struct AppState {
    engine: Arc<Engine>,
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<SessionState>>>>>,
}

impl AppState {
    pub fn new(engine: Engine) -> Self {
        Self::shared(Arc::new(engine))
    }

    pub fn shared(engine: Arc<Engine>) -> Self {
        Self {
            engine,
            sessions: Arc::default(),
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub phase: Phase,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UtteranceRequest {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UtteranceReply {
    pub response: RenderedOutput,
    pub phase: Phase,
    pub closed: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub phase: Phase,
    pub closed: bool,
    pub history: Vec<Exchange>,
}

pub struct ApiError(StatusCode, ErrorBody);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::SessionClosed => StatusCode::CONFLICT,
            Error::Noise(_) | Error::Config(_) | Error::Usage(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, ErrorBody::from(&e))
    }
}

fn not_found(id: &str) -> ApiError {
    ApiError(
        StatusCode::NOT_FOUND,
        ErrorBody::new("session_not_found", format!("no session `{id}`")),
    )
}

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, ErrorBody::new("invalid_request", message))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show).delete(remove))
        .route("/sessions/{id}/utterances", post(utter))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

async fn create(State(app): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<Created>), ApiError> {
    let overrides: SessionOverrides = if body.iter().all(u8::is_ascii_whitespace) {
        SessionOverrides::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| bad_request(e.to_string()))?
    };
    let session = app.engine.open_session(&overrides)?;
    let created = Created {
        session_id: session.session_id.clone(),
        phase: session.phase,
    };
    let mut sessions = app.sessions.write().await;
    if sessions.contains_key(&created.session_id) {
        return Err(ApiError(
            StatusCode::CONFLICT,
            ErrorBody::new("session_exists", format!("session `{}` already exists", created.session_id)),
        ));
    }
    sessions.insert(created.session_id.clone(), Arc::new(Mutex::new(session)));
    tracing::info!(session = %created.session_id, "session opened");
    Ok((StatusCode::CREATED, Json(created)))
}

async fn lookup(app: &AppState, id: &str) -> Result<Arc<Mutex<SessionState>>, ApiError> {
    app.sessions.read().await.get(id).cloned().ok_or_else(|| not_found(id))
}

async fn utter(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<UtteranceReply>, ApiError> {
    let request: UtteranceRequest = serde_json::from_slice(&body).map_err(|e| bad_request(e.to_string()))?;
    let session = lookup(&app, &id).await?;
    // the owned guard keeps this session's requests in arrival order
    let mut guard = session.lock_owned().await;
    let engine = app.engine.clone();
    let (guard, result) = tokio::task::spawn_blocking(move || {
        let result = engine.process_utterance(&mut guard, &request.text);
        (guard, result)
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, ErrorBody::new("internal", e.to_string())))?;
    let response = result?;
    Ok(Json(UtteranceReply {
        response,
        phase: guard.phase,
        closed: guard.closed,
    }))
}

async fn show(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let session = lookup(&app, &id).await?;
    let s = session.lock().await;
    Ok(Json(SessionView {
        session_id: s.session_id.clone(),
        phase: s.phase,
        closed: s.closed,
        history: s.history.clone(),
    }))
}

async fn remove(State(app): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    app.sessions.write().await.remove(&id).ok_or_else(|| not_found(&id))?;
    tracing::info!(session = %id, "session deleted");
    Ok(StatusCode::NO_CONTENT)
}

/// Serve until ctrl-c; in-flight requests finish before returning.
pub async fn serve(state: AppState, bind: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {bind}: {e}"))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await?;
    Ok(())
}
