use std::sync::Arc;

use super::{listener_choose, speaker_produce, SpeakerConfig};
use crate::adaptation::{
    augment, init_buffer, update_step, AdaptationConfig, AugmentMode, AugmentationSet, MapCache,
    Observation, OptimizerState, RehearsalBuffer, UpdateReport,
};
use crate::captioner::{CaptionerParams, FrozenSnapshot, Utterance};
use crate::error::Result;
use crate::world::{Context, DomainPool, ObjectId, Vocabulary};

/// Which side of the game the agent plays; selects the augmentation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentRole {
    Listener,
    Speaker,
}

/// A captioner adapting to one partner within one context.
#[derive(Debug, Clone)]
pub struct AdaptiveAgent {
    params: CaptionerParams,
    optimizer: OptimizerState,
    buffer: RehearsalBuffer,
    config: AdaptationConfig,
    speaker: SpeakerConfig,
    cache: Arc<MapCache>,
    updates: usize,
}

impl AdaptiveAgent {
    /// Fresh copy of the cache's snapshot with a self-captioned history.
    pub fn new(
        cache: Arc<MapCache>,
        context: &Context,
        pool: &DomainPool,
        config: AdaptationConfig,
        speaker: SpeakerConfig,
    ) -> Result<Self> {
        config.validate()?;
        speaker.validate()?;
        let params = cache.snapshot().fork();
        let buffer = init_buffer(&params, context, pool, config.max_decode_len)?;
        Ok(Self {
            params,
            optimizer: OptimizerState::default(),
            buffer,
            config,
            speaker,
            cache,
            updates: 0,
        })
    }

    pub fn params(&self) -> &CaptionerParams {
        &self.params
    }

    pub fn snapshot(&self) -> &FrozenSnapshot {
        self.cache.snapshot()
    }

    pub fn buffer(&self) -> &RehearsalBuffer {
        &self.buffer
    }

    pub fn config(&self) -> &AdaptationConfig {
        &self.config
    }

    pub fn speaker_config(&self) -> &SpeakerConfig {
        &self.speaker
    }

    /// Number of `update_step` calls applied so far.
    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn listen(
        &self,
        utterance: &Utterance,
        context: &Context,
        pool: &DomainPool,
    ) -> Result<(usize, Vec<f64>)> {
        let feats = context
            .members
            .iter()
            .map(|&m| pool.get(m).map(|o| o.features.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        listener_choose(&self.params, utterance, &feats)
    }

    pub fn speak(&self, target: ObjectId, pool: &DomainPool) -> Result<Utterance> {
        speaker_produce(&self.params, &pool.get(target)?.features, &self.speaker)
    }

    fn augmentations(
        &self,
        utterance: &Utterance,
        role: AgentRole,
        vocab: &Vocabulary,
    ) -> AugmentationSet {
        match role {
            AgentRole::Listener if self.config.listener_augmentation => {
                augment(utterance, AugmentMode::FreeText, vocab)
            }
            AgentRole::Speaker if self.config.speaker_augmentation => {
                augment(utterance, AugmentMode::Grammar, vocab)
            }
            _ => AugmentationSet::singleton(utterance.clone()),
        }
    }

    /// One `update_step` on the pair `(utterance, target)`.
    #[allow(clippy::too_many_arguments)]
    pub fn observe(
        &mut self,
        utterance: &Utterance,
        target: ObjectId,
        context: &Context,
        pool: &DomainPool,
        vocab: &Vocabulary,
        role: AgentRole,
        trial_index: usize,
        seed: u64,
    ) -> Result<UpdateReport> {
        let set = self.augmentations(utterance, role, vocab);
        let obs = Observation {
            utterance: utterance.clone(),
            target,
            context_id: context.id.clone(),
            trial_index,
        };
        let report = update_step(
            &mut self.params,
            &mut self.optimizer,
            &obs,
            &set,
            context,
            pool,
            &mut self.buffer,
            &self.config,
            &self.cache,
            seed,
        )?;
        self.updates += 1;
        Ok(report)
    }

    /// Success-gated speaker update: adapts only when the listener chose
    /// `target`; otherwise parameters stay bit-identical.
    #[allow(clippy::too_many_arguments)]
    pub fn speaker_feedback(
        &mut self,
        utterance: &Utterance,
        target: ObjectId,
        listener_correct: bool,
        context: &Context,
        pool: &DomainPool,
        vocab: &Vocabulary,
        trial_index: usize,
        seed: u64,
    ) -> Result<Option<UpdateReport>> {
        if !listener_correct {
            return Ok(None);
        }
        self.observe(
            utterance,
            target,
            context,
            pool,
            vocab,
            AgentRole::Speaker,
            trial_index,
            seed,
        )
        .map(Some)
    }
}
