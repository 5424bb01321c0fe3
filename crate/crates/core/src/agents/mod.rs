//! Listener and speaker policies over the captioner, the adapting agent
//! that owns them, and a grammar-driven simulated partner.

mod agent;
mod listener;
mod scripted;
mod speaker;

pub use agent::{AdaptiveAgent, AgentRole};
pub use listener::{argmax, listener_choose};
pub use scripted::{ReductionPlan, ScriptedPartner, MAX_REPETITION};
pub use speaker::{penalized_utility, speaker_produce, SpeakerConfig};
