use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use refgame::game::{trial_seed, GameEnv};
use refgame::setup::Pretrained;

use crate::config::{ServerSettings, ServiceConfig};
use crate::error::{Result, ServiceError};
use crate::live::{code_of, LiveSession};
use crate::protocol::{ClientMessage, ErrorCode, ServerMessage};
use crate::store::{SessionSummary, TranscriptStore};

/// A loaded session and the summary served over HTTP, which stays readable
/// while the session adapts.
#[derive(Debug)]
struct Slot {
    session: Mutex<LiveSession>,
    summary: Mutex<SessionSummary>,
}

impl Slot {
    fn new(session: LiveSession) -> Self {
        let summary = Mutex::new(session.summary());
        Self {
            session: Mutex::new(session),
            summary,
        }
    }
}

/// Shared server state: the read-only world plus the session registry.
#[derive(Debug)]
pub struct AppState {
    env: GameEnv,
    settings: ServerSettings,
    store: TranscriptStore,
    seed: u64,
    created: AtomicU64,
    sessions: Mutex<HashMap<String, Arc<Slot>>>,
}

pub type SharedState = Arc<AppState>;

impl AppState {
    pub fn new(env: GameEnv, settings: ServerSettings, store: TranscriptStore, seed: u64) -> Self {
        Self {
            env,
            settings,
            store,
            seed,
            created: AtomicU64::new(0),
            sessions: Mutex::new(HashMap::new()),
        }
    }

    /// Loads the checkpoint named by `config`, or pretrains when none is given.
    pub fn from_config(config: &ServiceConfig) -> Result<Self> {
        let settings = config.settings()?;
        let pretrained: Pretrained = match &config.checkpoint {
            Some(dir) => settings.setup.load(dir)?,
            None => {
                tracing::info!("no checkpoint given; pretraining from settings");
                settings.setup.pretrain()?
            }
        };
        let env = pretrained.env(&settings.setup)?;
        let store = TranscriptStore::open(&config.data_dir)?;
        Ok(Self::new(env, settings, store, config.seed))
    }

    pub fn env(&self) -> &GameEnv {
        &self.env
    }

    pub fn store(&self) -> &TranscriptStore {
        &self.store
    }

    fn slot(&self, id: &str) -> Option<Arc<Slot>> {
        self.sessions
            .lock()
            .expect("registry lock")
            .get(id)
            .cloned()
    }

    /// Summary of a loaded or stored session.
    pub fn summary(&self, id: &str) -> Option<SessionSummary> {
        if let Some(slot) = self.slot(id) {
            return Some(slot.summary.lock().expect("summary lock").clone());
        }
        if !self.store.exists(id) {
            return None;
        }
        self.store
            .load(id)
            .ok()
            .map(|t| SessionSummary::from_transcript(&t, None))
    }

    pub fn summaries(&self) -> Result<Vec<SessionSummary>> {
        Ok(self
            .store
            .ids()?
            .iter()
            .filter_map(|id| self.summary(id))
            .collect())
    }

    /// Parameter hash of a loaded session.
    pub fn params_hash(&self, id: &str) -> Option<String> {
        self.slot(id)
            .map(|s| s.session.lock().expect("session lock").params_hash())
    }

    fn join(
        &self,
        msg: &ClientMessage,
    ) -> std::result::Result<(Arc<Slot>, ServerMessage), Box<ServerMessage>> {
        let ClientMessage::Join {
            session_id,
            role,
            seed,
            context_kind,
        } = msg
        else {
            unreachable!("join is only called with join messages");
        };
        let fail = |id: Option<&String>, code, m: String| {
            Box::new(ServerMessage::error(id.cloned(), None, code, m))
        };
        let slot = match session_id {
            Some(id) => match self.slot(id) {
                Some(slot) => slot,
                None if self.store.exists(id) => {
                    let live = LiveSession::resume(&self.env, &self.store, &self.settings, id)
                        .map_err(|e| fail(Some(id), code_of(&e), e.to_string()))?;
                    tracing::info!(session = %id, trial = live.trial_index(), "session resumed");
                    let mut reg = self.sessions.lock().expect("registry lock");
                    reg.entry(id.clone())
                        .or_insert_with(|| Arc::new(Slot::new(live)))
                        .clone()
                }
                None => {
                    return Err(fail(
                        Some(id),
                        ErrorCode::NotFound,
                        format!("no session {id}"),
                    ))
                }
            },
            None => {
                let role = role
                    .ok_or_else(|| fail(None, ErrorCode::BadRequest, "join needs a role".into()))?;
                let n = self.created.fetch_add(1, Ordering::Relaxed);
                let seed = seed.unwrap_or_else(|| trial_seed(self.seed, n as usize));
                let id = uuid::Uuid::new_v4().simple().to_string();
                let kind = context_kind.unwrap_or(self.settings.context_kind);
                let live = LiveSession::create(
                    &self.env,
                    &self.store,
                    &self.settings,
                    id.clone(),
                    role,
                    kind,
                    seed,
                )
                .map_err(|e| fail(None, code_of(&e), e.to_string()))?;
                tracing::info!(session = %id, ?role, seed, "session created");
                let slot = Arc::new(Slot::new(live));
                self.sessions
                    .lock()
                    .expect("registry lock")
                    .insert(id, slot.clone());
                slot
            }
        };
        let state = slot
            .session
            .lock()
            .expect("session lock")
            .current(&self.env);
        Ok((slot, state))
    }

    fn handle(&self, slot: &Slot, msg: &ClientMessage) -> Vec<ServerMessage> {
        let mut live = slot.session.lock().expect("session lock");
        let out = live.handle(&self.env, &self.store, &self.settings, msg);
        *slot.summary.lock().expect("summary lock") = live.summary();
        out
    }
}

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/ws", get(ws_upgrade))
        .route("/sessions", get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .with_state(state)
}

/// Binds and serves until interrupted.
pub async fn serve(config: ServiceConfig) -> Result<()> {
    let state = {
        let config = config.clone();
        tokio::task::spawn_blocking(move || AppState::from_config(&config))
            .await
            .map_err(|e| ServiceError::Io(std::io::Error::other(e)))??
    };
    let listener = tokio::net::TcpListener::bind(SocketAddr::new(config.host, config.port)).await?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %config.data_dir.display(), "listening");
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn list_sessions(State(state): State<SharedState>) -> Response {
    match tokio::task::spawn_blocking(move || state.summaries()).await {
        Ok(Ok(list)) => Json(list).into_response(),
        Ok(Err(e)) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

async fn get_session(State(state): State<SharedState>, Path(id): Path<String>) -> Response {
    match tokio::task::spawn_blocking(move || state.summary(&id)).await {
        Ok(Some(s)) => Json(s).into_response(),
        Ok(None) => StatusCode::NOT_FOUND.into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

async fn get_transcript(State(state): State<SharedState>, Path(id): Path<String>) -> Response {
    if !state.store.exists(&id) {
        return StatusCode::NOT_FOUND.into_response();
    }
    match state.store.read_text(&id) {
        Ok(text) => ([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<SharedState>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, state))
}

/// Frames from one socket are handled strictly in arrival order.
async fn connection(mut socket: WebSocket, state: SharedState) {
    let mut joined: Option<Arc<Slot>> = None;
    while let Some(Ok(frame)) = socket.recv().await {
        let replies = match frame {
            Message::Text(text) => on_text(&state, &mut joined, text.as_str()).await,
            Message::Binary(_) => vec![error_for(
                &joined,
                ErrorCode::BadRequest,
                "frames must be text".into(),
            )],
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => continue,
        };
        for reply in replies {
            if socket
                .send(Message::Text(reply.to_json().into()))
                .await
                .is_err()
            {
                return;
            }
        }
    }
}

fn error_for(joined: &Option<Arc<Slot>>, code: ErrorCode, message: String) -> ServerMessage {
    match joined {
        Some(slot) => {
            let s = slot.summary.lock().expect("summary lock");
            ServerMessage::error(
                Some(s.session_id.clone()),
                Some(s.trials_completed),
                code,
                message,
            )
        }
        None => ServerMessage::error(None, None, code, message),
    }
}

async fn on_text(
    state: &SharedState,
    joined: &mut Option<Arc<Slot>>,
    text: &str,
) -> Vec<ServerMessage> {
    let msg = match ClientMessage::parse(text) {
        Ok(m) => m,
        Err(e) => return vec![error_for(joined, ErrorCode::BadRequest, e)],
    };
    let state = state.clone();
    match (&msg, joined.clone()) {
        (ClientMessage::Join { .. }, Some(_)) => {
            vec![error_for(
                joined,
                ErrorCode::Protocol,
                "this connection has already joined".into(),
            )]
        }
        (ClientMessage::Join { .. }, None) => {
            match tokio::task::spawn_blocking(move || state.join(&msg)).await {
                Ok(Ok((slot, first))) => {
                    *joined = Some(slot);
                    vec![first]
                }
                Ok(Err(e)) => vec![*e],
                Err(e) => vec![error_for(joined, ErrorCode::Internal, e.to_string())],
            }
        }
        (_, None) => vec![error_for(
            joined,
            ErrorCode::Protocol,
            "join a session first".into(),
        )],
        (_, Some(slot)) => {
            match tokio::task::spawn_blocking(move || state.handle(&slot, &msg)).await {
                Ok(out) => out,
                Err(e) => vec![error_for(joined, ErrorCode::Internal, e.to_string())],
            }
        }
    }
}
