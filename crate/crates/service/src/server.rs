//! HTTP and event-stream front end.
//!
//! - `POST /sessions` `{"player_id": ..}` creates a session: `{"session_id": ..}`
//! - `GET /players/{id}/progress` summarizes a stored profile
//! - `GET /sessions/{id}/stream` upgrades to a WebSocket carrying one
//!   [`SessionEvent`] JSON line per message, in both directions
//!
//! Each session sits behind its own async mutex, so its events (client lines
//! and timer ticks) are applied strictly one at a time.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::rejection::WebSocketUpgradeRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use moles_core::Catalog;
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, Mutex};
use tower_http::services::ServeDir;

use crate::config::GameConfig;
use crate::driver::{create_session, CreateError, Driver};
use crate::protocol::{lines, SessionEvent};
use crate::store::{Store, StoreError};

pub struct AppState {
    pub store: Arc<Store>,
    pub catalog: Arc<Catalog>,
    pub config: GameConfig,
    epoch: Instant,
    sessions: parking_lot::Mutex<HashMap<String, Arc<Mutex<Driver>>>>,
}

impl AppState {
    pub fn new(store: Arc<Store>, catalog: Arc<Catalog>, config: GameConfig) -> Arc<AppState> {
        Arc::new(AppState {
            store,
            catalog,
            config,
            epoch: Instant::now(),
            sessions: parking_lot::Mutex::new(HashMap::new()),
        })
    }

    /// Server wall clock: milliseconds since startup, monotonic.
    fn now(&self) -> u64 {
        self.epoch.elapsed().as_millis() as u64
    }

    fn session(&self, id: &str) -> Option<Arc<Mutex<Driver>>> {
        self.sessions.lock().get(id).cloned()
    }
}

pub fn router(state: Arc<AppState>, assets: Option<PathBuf>) -> Router {
    let router = Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/stream", get(stream))
        .route("/players/{id}/progress", get(progress));
    let router = match assets {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    };
    router.with_state(state)
}

pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    assets: Option<PathBuf>,
) -> std::io::Result<()> {
    axum::serve(listener, router(state, assets)).await
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::InvalidId(_) => StatusCode::BAD_REQUEST,
            StoreError::CorruptProfile { .. } | StoreError::Io { .. } => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        ApiError(status, e.to_string())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub player_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
}

async fn create(
    State(state): State<Arc<AppState>>,
    Json(request): Json<CreateSession>,
) -> Result<Json<SessionCreated>, ApiError> {
    let seed = rand::random();
    let (driver, _) = create_session(
        &state.store,
        &request.player_id,
        state.catalog.clone(),
        state.config.clone(),
        seed,
        state.now(),
    )
    .map_err(|e| match e {
        CreateError::Store(e) => ApiError::from(e),
        CreateError::Session(e) => ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    })?;
    let session_id = driver.session().session_id().to_owned();
    tracing::info!(session = %session_id, player = %request.player_id, seed, "session created");
    state
        .sessions
        .lock()
        .insert(session_id.clone(), Arc::new(Mutex::new(driver)));
    Ok(Json(SessionCreated { session_id }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub player_id: String,
    pub level: u32,
    pub words_seen: usize,
    pub due_count: usize,
    pub presentation_counter: u64,
}

async fn progress(
    State(state): State<Arc<AppState>>,
    Path(player_id): Path<String>,
) -> Result<Json<Progress>, ApiError> {
    let profile = state.store.load_profile(&player_id, &state.config.level)?;
    Ok(Json(Progress {
        level: profile.level(),
        words_seen: profile.memories.len(),
        due_count: profile.due_count(),
        presentation_counter: profile.presentation_counter,
        player_id: profile.player_id,
    }))
}

async fn stream(
    State(state): State<Arc<AppState>>,
    Path(session_id): Path<String>,
    upgrade: Result<WebSocketUpgrade, WebSocketUpgradeRejection>,
) -> Result<Response, ApiError> {
    // unknown sessions are 404 whether or not the request is an upgrade
    let driver = state
        .session(&session_id)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session {session_id}")))?;
    let upgrade = upgrade.map_err(|e| ApiError(e.status(), e.body_text()))?;
    Ok(upgrade.on_upgrade(move |socket| run_stream(state, session_id, driver, socket)))
}

async fn run_stream(
    state: Arc<AppState>,
    session_id: String,
    driver: Arc<Mutex<Driver>>,
    socket: WebSocket,
) {
    let (mut sink, mut incoming) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<Vec<SessionEvent>>();

    let writer = tokio::spawn(async move {
        while let Some(batch) = rx.recv().await {
            for event in batch {
                let quit = matches!(
                    &event,
                    SessionEvent::StateSnapshot { snapshot } if snapshot.mode == crate::protocol::ModeName::Ended
                );
                let mut line = event.to_line();
                line.push('\n');
                if sink.send(Message::Text(line.into())).await.is_err() {
                    return;
                }
                if quit {
                    let _ = sink.send(Message::Close(None)).await;
                    return;
                }
            }
        }
    });

    {
        let guard = driver.lock().await;
        let mut hello = guard.initial_events().to_vec();
        // a reconnecting client needs the current state, not the first one
        hello.retain(|e| !matches!(e, SessionEvent::StateSnapshot { .. }));
        hello.push(SessionEvent::StateSnapshot {
            snapshot: guard.session().snapshot(),
        });
        let _ = tx.send(hello);
    }

    let ticker = {
        let driver = driver.clone();
        let state = state.clone();
        let tx = tx.clone();
        let period = Duration::from_millis(state.config.tick_interval_ms);
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(period);
            loop {
                interval.tick().await;
                let out = {
                    let mut guard = driver.lock().await;
                    if guard.session().is_quit() {
                        return;
                    }
                    guard.tick(state.now())
                };
                if !out.is_empty() && tx.send(out).is_err() {
                    return;
                }
            }
        })
    };

    while let Some(Ok(message)) = incoming.next().await {
        let text = match message {
            Message::Text(text) => text.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let mut guard = driver.lock().await;
        for line in lines(&text) {
            let out = guard.client_line(line, state.now());
            if tx.send(out).is_err() {
                break;
            }
        }
        if guard.session().is_quit() {
            break;
        }
    }

    ticker.abort();
    drop(tx);
    let _ = writer.await;
    let guard = driver.lock().await;
    guard.persist();
    if guard.session().is_quit() {
        state.sessions.lock().remove(&session_id);
        tracing::info!(session = %session_id, score = guard.session().score(), "session ended");
    }
}
