//! Wire messages: one JSON object per WebSocket text frame.
//!
//! Every server message carries `version`, `sessionId` and `trialIndex`.
//! Client messages may carry `version`; any other value is rejected.

use refgame::world::{ContextKind, ObjectId};
use serde::{Deserialize, Serialize};

use crate::store::SessionSummary;

pub const PROTOCOL_VERSION: u32 = 1;

/// The side the human plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum HumanRole {
    HumanSpeaker,
    HumanListener,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum ClientMessage {
    /// Starts a session, or resumes one when `sessionId` is given.
    #[serde(rename_all = "camelCase")]
    Join {
        #[serde(default)]
        session_id: Option<String>,
        #[serde(default)]
        role: Option<HumanRole>,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        context_kind: Option<ContextKind>,
    },
    #[serde(rename_all = "camelCase")]
    Utterance { session_id: String, text: String },
    #[serde(rename_all = "camelCase")]
    Selection {
        session_id: String,
        object_id: ObjectId,
    },
}

impl ClientMessage {
    /// Parses one frame. The optional `version` field must match.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let obj = value
            .as_object_mut()
            .ok_or("message must be a JSON object")?;
        if let Some(v) = obj.remove("version") {
            if v.as_u64() != Some(PROTOCOL_VERSION as u64) {
                return Err(format!("unsupported protocol version {v}"));
            }
        }
        serde_json::from_value(value).map_err(|e| e.to_string())
    }

    pub fn session_id(&self) -> Option<&str> {
        match self {
            Self::Join { session_id, .. } => session_id.as_deref(),
            Self::Utterance { session_id, .. } | Self::Selection { session_id, .. } => {
                Some(session_id)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ErrorCode {
    /// The frame could not be parsed or its payload is invalid.
    BadRequest,
    /// The message is well formed but not allowed in the current state.
    Protocol,
    NotFound,
    /// Persisting the move failed; it was not applied and may be resent.
    Storage,
    Internal,
}

impl ErrorCode {
    pub fn retriable(self) -> bool {
        matches!(self, Self::Storage)
    }
}

/// One context member as shown to the human.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObjectView {
    pub id: ObjectId,
    pub description: String,
    pub values: Vec<usize>,
}

/// Whose move the session is waiting for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Turn {
    HumanSpeaks,
    HumanSelects,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateBody {
    pub role: HumanRole,
    pub turn: Turn,
    pub repetition: usize,
    pub trials: usize,
    pub context: Vec<ObjectView>,
    /// Screen order: position `i` shows `context[displayPermutation[i]]`.
    pub display_permutation: Vec<usize>,
    /// Shown to a human speaker only.
    pub target: Option<ObjectId>,
    /// The agent's description for a human listener.
    pub agent_utterance: Option<String>,
    /// Words of the human's last utterance outside the vocabulary.
    pub unknown_words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum ServerBody {
    State(StateBody),
    /// The agent's choice as listener.
    #[serde(rename_all = "camelCase")]
    Selection {
        object_id: ObjectId,
        /// Over `context` in state order.
        posterior: Vec<f64>,
    },
    #[serde(rename_all = "camelCase")]
    Feedback {
        target_id: ObjectId,
        choice_id: ObjectId,
        correct: bool,
        update_applied: bool,
    },
    GameOver {
        summary: SessionSummary,
    },
    #[serde(rename_all = "camelCase")]
    Error {
        code: ErrorCode,
        message: String,
        retriable: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ServerMessage {
    pub version: u32,
    pub session_id: Option<String>,
    pub trial_index: Option<usize>,
    #[serde(flatten)]
    pub body: ServerBody,
}

impl ServerMessage {
    pub fn new(session_id: Option<String>, trial_index: Option<usize>, body: ServerBody) -> Self {
        Self {
            version: PROTOCOL_VERSION,
            session_id,
            trial_index,
            body,
        }
    }

    pub fn error(
        session_id: Option<String>,
        trial_index: Option<usize>,
        code: ErrorCode,
        message: impl Into<String>,
    ) -> Self {
        Self::new(
            session_id,
            trial_index,
            ServerBody::Error {
                code,
                message: message.into(),
                retriable: code.retriable(),
            },
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}
