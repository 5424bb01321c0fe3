//! Repeated reference games: trial schedules, the per-trial state machine,
//! transcripts, simulated play and offline replay.

mod schedule;
mod selfplay;
mod session;
mod transcript;

pub use schedule::{make_schedule, TrialSchedule, DEFAULT_BLOCKS};
pub use selfplay::{
    replay, run_selfplay, GameOutcome, ReplayOutcome, ReplayTrial, ReplayVariant, SelfPlayConfig,
    SpeakerFeedback,
};
pub use session::{trial_seed, GameEnv, GameSession, ListenerMove, SessionConfig, SpeakerMove};
pub use transcript::{
    parse_header, RoleConfig, Transcript, TranscriptHeader, TranscriptRecord, WallTimes,
    TRANSCRIPT_FORMAT, TRANSCRIPT_VERSION,
};

#[cfg(test)]
mod tests;
