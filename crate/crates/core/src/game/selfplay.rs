use serde::{Deserialize, Serialize};

use super::{
    trial_seed, GameEnv, GameSession, ListenerMove, RoleConfig, SessionConfig, SpeakerMove,
    Transcript,
};
use crate::adaptation::AdaptationConfig;
use crate::agents::{AdaptiveAgent, AgentRole, ScriptedPartner};
use crate::captioner::{CaptionerParams, Utterance};
use crate::error::{Error, Result};
use crate::world::{ContextKind, ObjectId};

/// A simulated game against the scripted partner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfPlayConfig {
    pub role: RoleConfig,
    pub context_kind: ContextKind,
    pub session: SessionConfig,
    /// How the simulated listener answers an agent speaker.
    pub feedback: SpeakerFeedback,
}

/// The simulated listener facing an agent speaker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SpeakerFeedback {
    /// The scripted partner's literal reading of the utterance.
    #[default]
    Scripted,
    /// The target is always selected.
    AlwaysCorrect,
}

impl Default for SelfPlayConfig {
    fn default() -> Self {
        Self {
            role: RoleConfig::AgentListener,
            context_kind: ContextKind::Challenging,
            session: SessionConfig::default(),
            feedback: SpeakerFeedback::Scripted,
        }
    }
}

/// A finished simulated game.
#[derive(Debug, Clone)]
pub struct GameOutcome {
    pub transcript: Transcript,
    /// Parameters at the start of each trial, when kept.
    pub snapshots: Vec<CaptionerParams>,
    pub final_params: CaptionerParams,
}

/// Plays a full game; the context, schedule, partner and every update are
/// derived from `seed`.
pub fn run_selfplay(env: &GameEnv, config: &SelfPlayConfig, seed: u64) -> Result<GameOutcome> {
    let context = env.context(config.context_kind, seed)?;
    let mut session = GameSession::new(
        env,
        format!("g{seed}"),
        config.role,
        context,
        config.session.clone(),
        seed,
    )?;
    let partner = ScriptedPartner::new(seed);
    session.set_partner_seed(Some(partner.seed));
    while let Some(target) = session.current_target() {
        match config.role {
            RoleConfig::AgentListener => {
                let u = partner.speak(
                    target,
                    session.context(),
                    &env.pool,
                    &env.vocab,
                    session.repetition(),
                )?;
                session.run_trial(env, SpeakerMove::Partner(u), ListenerMove::Agent)?;
            }
            RoleConfig::AgentSpeaker => {
                let listener = match config.feedback {
                    SpeakerFeedback::Scripted => ListenerMove::Scripted(partner),
                    SpeakerFeedback::AlwaysCorrect => ListenerMove::Partner(target),
                };
                session.run_trial(env, SpeakerMove::Agent, listener)?;
            }
        }
    }
    Ok(GameOutcome {
        transcript: session.transcript(),
        snapshots: session.snapshots().to_vec(),
        final_params: session.agent().params().clone(),
    })
}

/// An alternative agent re-run against a recorded game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayVariant {
    pub adaptation: AdaptationConfig,
    /// Off replays the frozen baseline.
    pub adapt: bool,
}

impl Default for ReplayVariant {
    fn default() -> Self {
        Self {
            adaptation: AdaptationConfig::default(),
            adapt: true,
        }
    }
}

impl ReplayVariant {
    /// The configuration the game was recorded under.
    pub fn recorded(transcript: &Transcript) -> Self {
        Self {
            adaptation: transcript.header.adaptation.clone(),
            adapt: transcript.header.adapt,
        }
    }

    pub fn frozen() -> Self {
        Self {
            adapt: false,
            ..Self::default()
        }
    }
}

/// The replayed agent's reading of one recorded trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayTrial {
    pub trial_index: usize,
    pub repetition_block: usize,
    pub target_id: ObjectId,
    pub posterior: Vec<f64>,
    pub choice_id: ObjectId,
    pub correct: bool,
}

impl ReplayTrial {
    pub fn target_posterior(&self, context: &[ObjectId]) -> f64 {
        let pos = context
            .iter()
            .position(|&m| m == self.target_id)
            .expect("target in context");
        self.posterior[pos]
    }
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub trials: Vec<ReplayTrial>,
    pub final_params: CaptionerParams,
}

/// Re-runs adaptation against the recorded utterances and feedback of
/// `transcript` under `variant`. The transcript is not modified.
///
/// Listener posteriors are those of the replayed agent over the recorded
/// utterance. Updates follow the recorded role: every trial for a listener
/// (subject to the variant's error flag, judged by the replayed choice), and
/// recorded successes for a speaker.
pub fn replay(
    env: &GameEnv,
    transcript: &Transcript,
    variant: &ReplayVariant,
) -> Result<ReplayOutcome> {
    let header = &transcript.header;
    if header.snapshot_hash != env.snapshot().hash() {
        return Err(Error::Input(format!(
            "transcript was recorded against model {}, not {}",
            header.snapshot_hash,
            env.snapshot().hash()
        )));
    }
    header.context.validate(&env.pool)?;
    variant.adaptation.validate()?;
    let mut agent = AdaptiveAgent::new(
        env.cache.clone(),
        &header.context,
        &env.pool,
        variant.adaptation.clone(),
        header.speaker,
    )?;
    let mut trials = Vec::with_capacity(transcript.records.len());
    for (t, record) in transcript.records.iter().enumerate() {
        if record.context_object_ids != header.context.members
            || header.schedule.targets.get(t) != Some(&record.target_id)
        {
            return Err(Error::Input(format!(
                "record {t} does not match the transcript header"
            )));
        }
        let utterance = Utterance::from_tokens(record.utterance_tokens.clone())?;
        utterance.check_vocab(env.vocab.len())?;
        let (pos, posterior) = agent.listen(&utterance, &header.context, &env.pool)?;
        let choice = header.context.members[pos];
        let correct = choice == record.target_id;
        let seed = trial_seed(header.seed, t);
        if variant.adapt {
            match record.role_config {
                RoleConfig::AgentListener => {
                    if correct || variant.adaptation.listener_update_on_error {
                        agent.observe(
                            &utterance,
                            record.target_id,
                            &header.context,
                            &env.pool,
                            &env.vocab,
                            AgentRole::Listener,
                            t + 1,
                            seed,
                        )?;
                    }
                }
                RoleConfig::AgentSpeaker => {
                    agent.speaker_feedback(
                        &utterance,
                        record.target_id,
                        record.correct,
                        &header.context,
                        &env.pool,
                        &env.vocab,
                        t + 1,
                        seed,
                    )?;
                }
            }
        }
        trials.push(ReplayTrial {
            trial_index: t,
            repetition_block: record.repetition_block,
            target_id: record.target_id,
            posterior,
            choice_id: choice,
            correct,
        });
    }
    Ok(ReplayOutcome {
        trials,
        final_params: agent.params().clone(),
    })
}
