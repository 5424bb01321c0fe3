use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    make_schedule, RoleConfig, Transcript, TranscriptHeader, TranscriptRecord, TrialSchedule,
    WallTimes, DEFAULT_BLOCKS, TRANSCRIPT_FORMAT, TRANSCRIPT_VERSION,
};
use crate::adaptation::{AdaptationConfig, MapCache};
use crate::agents::{AdaptiveAgent, AgentRole, ScriptedPartner, SpeakerConfig};
use crate::captioner::{CaptionerParams, FrozenSnapshot, Utterance};
use crate::error::{Error, Result};
use crate::world::{
    build_challenging_context_in, build_simple_context, kmeans, kmeans::default_k, Clustering,
    Context, ContextKind, DomainPool, ObjectId, Vocabulary,
};

/// Shared read-only world for many games: the domain, the frozen model, its
/// MAP cache, and the encoder-space clustering used for hard contexts.
#[derive(Debug, Clone)]
pub struct GameEnv {
    pub pool: Arc<DomainPool>,
    pub vocab: Arc<Vocabulary>,
    pub cache: Arc<MapCache>,
    /// Encoder state of every pool object.
    pub space: Arc<Vec<Vec<f64>>>,
    pub clusters: Arc<Clustering>,
}

impl GameEnv {
    pub fn new(
        pool: DomainPool,
        snapshot: &FrozenSnapshot,
        max_decode_len: usize,
        seed: u64,
    ) -> Result<Self> {
        let vocab = Vocabulary::from_schema(&pool.schema);
        if vocab.len() != snapshot.params().dims.vocab_size {
            return Err(Error::Config(format!(
                "model vocabulary {} does not match domain vocabulary {}",
                snapshot.params().dims.vocab_size,
                vocab.len()
            )));
        }
        let space = pool
            .objects
            .iter()
            .map(|o| snapshot.params().encode(&o.features))
            .collect::<Result<Vec<_>>>()?;
        let clusters = kmeans(&space, default_k(pool.len()), seed)?;
        let cache = MapCache::build(snapshot, &pool, max_decode_len)?;
        Ok(Self {
            pool: Arc::new(pool),
            vocab: Arc::new(vocab),
            cache: Arc::new(cache),
            space: Arc::new(space),
            clusters: Arc::new(clusters),
        })
    }

    pub fn snapshot(&self) -> &FrozenSnapshot {
        self.cache.snapshot()
    }

    /// Challenging contexts are neighbourhoods in the encoder's space, where
    /// objects the pretrained model describes alike sit close together.
    pub fn context(&self, kind: ContextKind, seed: u64) -> Result<Context> {
        match kind {
            ContextKind::Challenging => {
                build_challenging_context_in(&self.pool, &self.space, &self.clusters, seed)
            }
            ContextKind::Simple => build_simple_context(&self.pool, seed),
        }
    }
}

/// How a session is set up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub blocks: usize,
    pub adaptation: AdaptationConfig,
    pub speaker: SpeakerConfig,
    /// Off for the frozen baseline.
    pub adapt: bool,
    /// Keep the parameters in effect at the start of every trial.
    pub keep_snapshots: bool,
    /// Record wall-clock timings (breaks byte-identical reruns).
    pub record_timing: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            blocks: DEFAULT_BLOCKS,
            adaptation: AdaptationConfig::default(),
            speaker: SpeakerConfig::default(),
            adapt: true,
            keep_snapshots: false,
            record_timing: false,
        }
    }
}

/// The speaking side of a trial.
#[derive(Debug, Clone, PartialEq)]
pub enum SpeakerMove {
    Agent,
    Partner(Utterance),
}

/// The selecting side of a trial.
#[derive(Debug, Clone, PartialEq)]
pub enum ListenerMove {
    Agent,
    Partner(ObjectId),
    Scripted(ScriptedPartner),
}

/// Per-trial seed derived from the game seed.
pub fn trial_seed(game_seed: u64, trial: usize) -> u64 {
    let mut z = game_seed
        ^ (trial as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One game between the adaptive agent and a partner.
#[derive(Debug, Clone)]
pub struct GameSession {
    id: String,
    role: RoleConfig,
    context: Context,
    schedule: TrialSchedule,
    agent: AdaptiveAgent,
    config: SessionConfig,
    seed: u64,
    partner_seed: Option<u64>,
    records: Vec<TranscriptRecord>,
    snapshots: Vec<CaptionerParams>,
    pending: Option<Utterance>,
}

impl GameSession {
    pub fn new(
        env: &GameEnv,
        id: impl Into<String>,
        role: RoleConfig,
        context: Context,
        config: SessionConfig,
        seed: u64,
    ) -> Result<Self> {
        context.validate(&env.pool)?;
        let schedule = make_schedule(&context, config.blocks, seed)?;
        let agent = AdaptiveAgent::new(
            env.cache.clone(),
            &context,
            &env.pool,
            config.adaptation.clone(),
            config.speaker,
        )?;
        Ok(Self {
            id: id.into(),
            role,
            context,
            schedule,
            agent,
            config,
            seed,
            partner_seed: None,
            records: Vec::new(),
            snapshots: Vec::new(),
            pending: None,
        })
    }

    /// Rebuilds a session at the trial boundary after the last record of
    /// `transcript` by re-running every recorded move. Fails if the rerun
    /// disagrees with the record on any move the agent made.
    pub fn restore(
        env: &GameEnv,
        transcript: &Transcript,
        keep_snapshots: bool,
        record_timing: bool,
    ) -> Result<Self> {
        let h = &transcript.header;
        if h.snapshot_hash != env.snapshot().hash() {
            return Err(Error::Input(format!(
                "transcript was recorded against model {}, not {}",
                h.snapshot_hash,
                env.snapshot().hash()
            )));
        }
        let config = SessionConfig {
            blocks: h.schedule.blocks,
            adaptation: h.adaptation.clone(),
            speaker: h.speaker,
            adapt: h.adapt,
            keep_snapshots,
            record_timing,
        };
        let mut session = Self::new(
            env,
            h.game_id.clone(),
            h.role_config,
            h.context.clone(),
            config,
            h.seed,
        )?;
        if session.schedule != h.schedule {
            return Err(Error::Format(
                "transcript schedule does not match its seed".into(),
            ));
        }
        session.partner_seed = h.partner_seed;
        for r in &transcript.records {
            let (speaker, listener) = match h.role_config {
                RoleConfig::AgentListener => (
                    SpeakerMove::Partner(Utterance::from_tokens(r.utterance_tokens.clone())?),
                    ListenerMove::Agent,
                ),
                RoleConfig::AgentSpeaker => {
                    (SpeakerMove::Agent, ListenerMove::Partner(r.choice_id))
                }
            };
            let rerun = session.run_trial(env, speaker, listener)?;
            let agrees = rerun.utterance_tokens == r.utterance_tokens
                && rerun.target_id == r.target_id
                && rerun.choice_id == r.choice_id
                && rerun.update_applied == r.update_applied
                && rerun.seed == r.seed
                && (h.role_config == RoleConfig::AgentSpeaker
                    || rerun.listener_posterior == r.listener_posterior);
            if !agrees {
                return Err(Error::Format(format!(
                    "trial {} does not replay to its record",
                    r.trial_index
                )));
            }
            // A partner's posterior is only known from the record.
            *session.records.last_mut().expect("just pushed") = r.clone();
        }
        Ok(session)
    }

    /// Notes the seed of a scripted partner in the transcript header.
    pub fn set_partner_seed(&mut self, seed: Option<u64>) {
        self.partner_seed = seed;
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn role(&self) -> RoleConfig {
        self.role
    }

    pub fn context(&self) -> &Context {
        &self.context
    }

    pub fn schedule(&self) -> &TrialSchedule {
        &self.schedule
    }

    pub fn agent(&self) -> &AdaptiveAgent {
        &self.agent
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trial_index(&self) -> usize {
        self.records.len()
    }

    pub fn is_finished(&self) -> bool {
        self.records.len() == self.schedule.len()
    }

    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    /// Parameters in effect at the start of each completed trial.
    pub fn snapshots(&self) -> &[CaptionerParams] {
        &self.snapshots
    }

    pub fn current_target(&self) -> Option<ObjectId> {
        self.schedule.targets.get(self.trial_index()).copied()
    }

    /// 1-based repetition of the current trial.
    pub fn repetition(&self) -> usize {
        self.schedule.repetition(self.trial_index())
    }

    /// Screen order of the context for the current trial.
    pub fn display_permutation(&self) -> Vec<usize> {
        display_permutation(self.seed, self.trial_index(), self.context.members.len())
    }

    /// The agent's utterance for the current trial (agent-speaker sessions).
    /// Repeated calls return the same utterance.
    pub fn agent_utterance(&mut self, env: &GameEnv) -> Result<Utterance> {
        if self.role != RoleConfig::AgentSpeaker {
            return Err(Error::Protocol(
                "the agent does not speak in this session".into(),
            ));
        }
        let target = self
            .current_target()
            .ok_or_else(|| Error::Protocol("game is over".into()))?;
        if let Some(u) = &self.pending {
            return Ok(u.clone());
        }
        let u = self.agent.speak(target, &env.pool)?;
        self.pending = Some(u.clone());
        Ok(u)
    }

    /// Plays the current trial: produce, choose, feedback, adapt.
    pub fn run_trial(
        &mut self,
        env: &GameEnv,
        speaker: SpeakerMove,
        listener: ListenerMove,
    ) -> Result<TranscriptRecord> {
        let target = self
            .current_target()
            .ok_or_else(|| Error::Protocol("game is over".into()))?;
        let t = self.trial_index();
        let seed = trial_seed(self.seed, t);
        let started = Instant::now();
        let snapshot = self
            .config
            .keep_snapshots
            .then(|| self.agent.params().clone());

        let (utterance, posterior, choice, respond_ms) = match (self.role, &speaker, &listener) {
            (RoleConfig::AgentListener, SpeakerMove::Partner(u), ListenerMove::Agent) => {
                u.check_vocab(env.vocab.len())?;
                let (pos, posterior) = self.agent.listen(u, &self.context, &env.pool)?;
                (
                    u.clone(),
                    posterior,
                    self.context.members[pos],
                    elapsed_ms(started),
                )
            }
            (RoleConfig::AgentSpeaker, SpeakerMove::Agent, ListenerMove::Partner(choice)) => {
                if !self.context.contains(*choice) {
                    return Err(Error::Input(format!("{choice} is not in the context")));
                }
                let u = self.agent_utterance(env)?;
                let mut posterior = vec![0.0; self.context.members.len()];
                posterior[self.context.position(*choice).expect("checked")] = 1.0;
                (u, posterior, *choice, elapsed_ms(started))
            }
            (RoleConfig::AgentSpeaker, SpeakerMove::Agent, ListenerMove::Scripted(partner)) => {
                let u = self.agent_utterance(env)?;
                let respond = elapsed_ms(started);
                let posterior =
                    partner.literal_posterior(&u, &self.context, &env.pool, &env.vocab)?;
                let choice = partner.listen(&u, &self.context, &env.pool, &env.vocab, seed)?;
                (u, posterior, choice, respond)
            }
            (role, s, l) => {
                return Err(Error::Protocol(format!(
                    "moves ({}, {}) are not valid for a {role:?} session",
                    speaker_name(s),
                    listener_name(l)
                )));
            }
        };
        let correct = choice == target;

        let adapt_start = Instant::now();
        let update_applied = match self.role {
            RoleConfig::AgentListener => {
                let wanted = self.config.adapt
                    && (correct || self.config.adaptation.listener_update_on_error);
                if wanted {
                    self.agent.observe(
                        &utterance,
                        target,
                        &self.context,
                        &env.pool,
                        &env.vocab,
                        AgentRole::Listener,
                        t + 1,
                        seed,
                    )?;
                }
                wanted
            }
            RoleConfig::AgentSpeaker => {
                if self.config.adapt {
                    self.agent
                        .speaker_feedback(
                            &utterance,
                            target,
                            correct,
                            &self.context,
                            &env.pool,
                            &env.vocab,
                            t + 1,
                            seed,
                        )?
                        .is_some()
                } else {
                    false
                }
            }
        };
        let wall_times = self.config.record_timing.then(|| WallTimes {
            respond_ms,
            adapt_ms: elapsed_ms(adapt_start),
        });

        let record = TranscriptRecord {
            game_id: self.id.clone(),
            trial_index: t,
            repetition_block: self.schedule.repetition(t),
            context_object_ids: self.context.members.clone(),
            target_id: target,
            role_config: self.role,
            utterance_tokens: utterance.tokens().to_vec(),
            utterance_text: utterance.render(&env.vocab),
            listener_posterior: posterior,
            choice_id: choice,
            correct,
            update_applied,
            display_permutation: display_permutation(self.seed, t, self.context.members.len()),
            wall_times,
            seed,
        };
        record.validate()?;
        if let Some(s) = snapshot {
            self.snapshots.push(s);
        }
        self.pending = None;
        self.records.push(record.clone());
        Ok(record)
    }

    pub fn header(&self) -> TranscriptHeader {
        TranscriptHeader {
            format: TRANSCRIPT_FORMAT.into(),
            version: TRANSCRIPT_VERSION,
            game_id: self.id.clone(),
            role_config: self.role,
            context: self.context.clone(),
            schedule: self.schedule.clone(),
            seed: self.seed,
            partner_seed: self.partner_seed,
            snapshot_hash: self.agent.snapshot().hash().to_string(),
            adapt: self.config.adapt,
            adaptation: self.config.adaptation.clone(),
            speaker: self.config.speaker,
        }
    }

    pub fn transcript(&self) -> Transcript {
        Transcript {
            header: self.header(),
            records: self.records.clone(),
        }
    }
}

fn display_permutation(seed: u64, trial: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed ^ 0x5eed_d15b, trial));
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    perm
}

fn elapsed_ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn speaker_name(m: &SpeakerMove) -> &'static str {
    match m {
        SpeakerMove::Agent => "agent speaks",
        SpeakerMove::Partner(_) => "partner speaks",
    }
}

fn listener_name(m: &ListenerMove) -> &'static str {
    match m {
        ListenerMove::Agent => "agent selects",
        ListenerMove::Partner(_) | ListenerMove::Scripted(_) => "partner selects",
    }
}
