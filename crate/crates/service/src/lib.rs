//! Live game server: human partners play repeated reference games against
//! the adaptive agent over a WebSocket, one in-memory model per session.
//!
//! Routes:
//! - `GET /ws`: the game protocol, see [`protocol`].
//! - `GET /sessions`: summaries of every stored session.
//! - `GET /sessions/{id}`: one summary.
//! - `GET /sessions/{id}/transcript`: the session's transcript lines.

pub mod config;
pub mod error;
pub mod live;
pub mod protocol;
pub mod server;
pub mod store;

pub use config::{ServerSettings, ServiceConfig};
pub use error::{Result, ServiceError};
pub use live::LiveSession;
pub use protocol::{
    ClientMessage, ErrorCode, HumanRole, ServerBody, ServerMessage, PROTOCOL_VERSION,
};
pub use server::{router, serve, AppState, SharedState};
pub use store::{SessionSummary, TranscriptStore};
