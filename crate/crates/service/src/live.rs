//! One session's state machine. Every move is persisted before it takes
//! effect; a failed write leaves the session as it was.

use refgame::captioner::Utterance;
use refgame::game::{
    GameEnv, GameSession, ListenerMove, RoleConfig, SpeakerMove, TranscriptRecord,
};
use refgame::world::ContextKind;

use crate::config::ServerSettings;
use crate::error::ServiceError;
use crate::protocol::{
    ClientMessage, ErrorCode, HumanRole, ObjectView, ServerBody, ServerMessage, StateBody, Turn,
};
use crate::store::{SessionSummary, TranscriptStore};

#[derive(Debug, Clone)]
pub struct LiveSession {
    session: GameSession,
    unknown_words: Vec<String>,
}

impl HumanRole {
    /// The agent plays the other side.
    pub fn agent_role(self) -> RoleConfig {
        match self {
            Self::HumanSpeaker => RoleConfig::AgentListener,
            Self::HumanListener => RoleConfig::AgentSpeaker,
        }
    }

    pub fn from_agent_role(role: RoleConfig) -> Self {
        match role {
            RoleConfig::AgentListener => Self::HumanSpeaker,
            RoleConfig::AgentSpeaker => Self::HumanListener,
        }
    }
}

impl LiveSession {
    /// Starts a session with fresh parameters and persists its header.
    pub fn create(
        env: &GameEnv,
        store: &TranscriptStore,
        settings: &ServerSettings,
        id: String,
        role: HumanRole,
        kind: ContextKind,
        seed: u64,
    ) -> Result<Self, ServiceError> {
        let context = env.context(kind, seed)?;
        let session = GameSession::new(
            env,
            id,
            role.agent_role(),
            context,
            settings.session.clone(),
            seed,
        )?;
        store.create(&session.header())?;
        Ok(Self {
            session,
            unknown_words: Vec::new(),
        })
    }

    /// Reloads a stored session at its last completed trial.
    pub fn resume(
        env: &GameEnv,
        store: &TranscriptStore,
        settings: &ServerSettings,
        id: &str,
    ) -> Result<Self, ServiceError> {
        let transcript = store.load(id)?;
        let session = GameSession::restore(
            env,
            &transcript,
            settings.session.keep_snapshots,
            settings.session.record_timing,
        )?;
        Ok(Self {
            session,
            unknown_words: Vec::new(),
        })
    }

    pub fn id(&self) -> &str {
        self.session.id()
    }

    pub fn role(&self) -> HumanRole {
        HumanRole::from_agent_role(self.session.role())
    }

    pub fn trial_index(&self) -> usize {
        self.session.trial_index()
    }

    pub fn game(&self) -> &GameSession {
        &self.session
    }

    pub fn params_hash(&self) -> String {
        self.session.agent().params().hash()
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary::from_transcript(&self.session.transcript(), Some(self.params_hash()))
    }

    fn message(&self, trial: usize, body: ServerBody) -> ServerMessage {
        ServerMessage::new(Some(self.id().to_string()), Some(trial), body)
    }

    fn error(&self, code: ErrorCode, message: impl Into<String>) -> ServerMessage {
        ServerMessage::error(
            Some(self.id().to_string()),
            Some(self.trial_index()),
            code,
            message,
        )
    }

    /// The state of the current trial, or the game summary once finished.
    pub fn current(&mut self, env: &GameEnv) -> ServerMessage {
        let t = self.trial_index();
        if self.session.is_finished() {
            return self.message(
                t,
                ServerBody::GameOver {
                    summary: self.summary(),
                },
            );
        }
        let role = self.role();
        let agent_utterance = match role {
            HumanRole::HumanSpeaker => None,
            HumanRole::HumanListener => match self.session.agent_utterance(env) {
                Ok(u) => Some(u.render(&env.vocab)),
                Err(e) => {
                    return self.error(code_of(&ServiceError::from(e)), "the agent could not speak")
                }
            },
        };
        let context = self
            .session
            .context()
            .members
            .iter()
            .map(|&id| {
                let o = env.pool.get(id).expect("sessions hold validated contexts");
                ObjectView {
                    id,
                    description: o.describe(&env.pool.schema),
                    values: o.values.clone(),
                }
            })
            .collect();
        let body = StateBody {
            role,
            turn: match role {
                HumanRole::HumanSpeaker => Turn::HumanSpeaks,
                HumanRole::HumanListener => Turn::HumanSelects,
            },
            repetition: self.session.repetition(),
            trials: self.session.schedule().len(),
            context,
            display_permutation: self.session.display_permutation(),
            target: (role == HumanRole::HumanSpeaker)
                .then(|| self.session.current_target())
                .flatten(),
            agent_utterance,
            unknown_words: self.unknown_words.clone(),
        };
        self.message(t, ServerBody::State(body))
    }

    /// Applies one move and returns the responses in order. Rejected moves
    /// leave the session unchanged.
    pub fn handle(
        &mut self,
        env: &GameEnv,
        store: &TranscriptStore,
        settings: &ServerSettings,
        msg: &ClientMessage,
    ) -> Vec<ServerMessage> {
        if msg.session_id() != Some(self.id()) {
            return vec![self.error(
                ErrorCode::BadRequest,
                "sessionId does not match this session",
            )];
        }
        let (speaker, listener, unknown) = match (msg, self.role()) {
            (ClientMessage::Join { .. }, _) => {
                return vec![self.error(ErrorCode::Protocol, "already joined")];
            }
            _ if self.session.is_finished() => {
                return vec![self.error(ErrorCode::Protocol, "the game is over")];
            }
            (ClientMessage::Utterance { text, .. }, HumanRole::HumanSpeaker) => {
                match Utterance::parse(text, &env.vocab) {
                    Ok((u, unknown)) => (SpeakerMove::Partner(u), ListenerMove::Agent, unknown),
                    Err(e) => return vec![self.error(ErrorCode::BadRequest, e.to_string())],
                }
            }
            (ClientMessage::Selection { object_id, .. }, HumanRole::HumanListener) => {
                if !self.session.context().contains(*object_id) {
                    return vec![self.error(
                        ErrorCode::BadRequest,
                        format!("{object_id} is not in the context"),
                    )];
                }
                (
                    SpeakerMove::Agent,
                    ListenerMove::Partner(*object_id),
                    Vec::new(),
                )
            }
            (ClientMessage::Utterance { .. }, HumanRole::HumanListener) => {
                return vec![self.error(
                    ErrorCode::Protocol,
                    "the agent is the speaker in this session",
                )];
            }
            (ClientMessage::Selection { .. }, HumanRole::HumanSpeaker) => {
                return vec![self.error(
                    ErrorCode::Protocol,
                    "the agent is the listener in this session",
                )];
            }
        };

        let backup = self.session.clone();
        let record = match self.play(env, store, speaker, listener) {
            Ok(r) => r,
            Err(e) => {
                self.session = backup;
                return vec![self.error(code_of(&e), e.to_string())];
            }
        };
        self.unknown_words = unknown;
        tracing::info!(
            session = self.id(),
            trial = record.trial_index,
            correct = record.correct,
            "trial complete"
        );

        let mut out = Vec::new();
        if self.role() == HumanRole::HumanSpeaker {
            out.push(self.message(
                record.trial_index,
                ServerBody::Selection {
                    object_id: record.choice_id,
                    posterior: record.listener_posterior.clone(),
                },
            ));
        }
        out.push(self.message(
            record.trial_index,
            ServerBody::Feedback {
                target_id: record.target_id,
                choice_id: record.choice_id,
                correct: record.correct,
                update_applied: record.update_applied,
            },
        ));
        if self.session.is_finished() && settings.save_checkpoints {
            if let Err(e) = store.save_checkpoint(self.id(), self.session.agent().params()) {
                out.push(self.error(ErrorCode::Storage, e.to_string()));
            }
        }
        out.push(self.current(env));
        out
    }

    fn play(
        &mut self,
        env: &GameEnv,
        store: &TranscriptStore,
        speaker: SpeakerMove,
        listener: ListenerMove,
    ) -> Result<TranscriptRecord, ServiceError> {
        let record = self.session.run_trial(env, speaker, listener)?;
        store.append(&record)?;
        Ok(record)
    }
}

pub(crate) fn code_of(e: &ServiceError) -> ErrorCode {
    match e {
        ServiceError::Game(refgame::Error::Input(_)) => ErrorCode::BadRequest,
        ServiceError::Game(refgame::Error::Protocol(_)) => ErrorCode::Protocol,
        ServiceError::Storage { .. } | ServiceError::Game(refgame::Error::Io { .. }) => {
            ErrorCode::Storage
        }
        _ => ErrorCode::Internal,
    }
}
