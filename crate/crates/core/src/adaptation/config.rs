use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::captioner::DEFAULT_MAX_LEN;
use crate::error::{Error, Result};

/// Weights of the four objective terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Coefficients {
    pub utterance: f64,
    pub contrastive: f64,
    pub kl_reg: f64,
    pub rehearsal: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Self {
            utterance: 1.0,
            contrastive: 0.1,
            kl_reg: 0.5,
            rehearsal: 0.3,
        }
    }
}

/// Update rule applied to each gradient of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// `θ <- θ + β ∇f`.
    Sgd,
    /// Adam moments kept per game, ascent direction.
    Adam,
}

/// Word-embedding width of the full-scale decoder.
pub const REFERENCE_WIDTH: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptationConfig {
    pub learning_rate: f64,
    /// Embedding width `learning_rate` refers to. Steps are scaled by
    /// `reference_width / embed_dim`; 0 applies the rate unscaled.
    pub reference_width: usize,
    pub steps_per_trial: usize,
    /// Augmentation sample per step, the full utterance included.
    pub augment_batch: usize,
    /// Rehearsal sample per step.
    pub rehearsal_batch: usize,
    /// Pool objects sampled per step for the regularizer.
    pub reg_pool_sample: usize,
    pub coefficients: Coefficients,
    pub max_decode_len: usize,
    pub optimizer: Optimizer,
    /// Sub-phrase augmentation of the agent's own utterances.
    pub speaker_augmentation: bool,
    /// Chunk-based augmentation of the partner's utterances.
    pub listener_augmentation: bool,
    /// Include the contrastive term in rehearsal.
    pub rehearsal_contrastive: bool,
    /// Update the listener after trials it got wrong.
    pub listener_update_on_error: bool,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0005,
            reference_width: REFERENCE_WIDTH,
            steps_per_trial: 6,
            augment_batch: 8,
            rehearsal_batch: 8,
            reg_pool_sample: 50,
            coefficients: Coefficients::default(),
            max_decode_len: DEFAULT_MAX_LEN,
            optimizer: Optimizer::Adam,
            speaker_augmentation: true,
            listener_augmentation: true,
            rehearsal_contrastive: true,
            listener_update_on_error: true,
        }
    }
}

impl AdaptationConfig {
    pub fn validate(&self) -> Result<()> {
        let c = &self.coefficients;
        for (name, v) in [
            ("utterance", c.utterance),
            ("contrastive", c.contrastive),
            ("kl_reg", c.kl_reg),
            ("rehearsal", c.rehearsal),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "coefficient {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.steps_per_trial == 0 {
            return Err(Error::Config("steps_per_trial must be at least 1".into()));
        }
        if self.augment_batch == 0 {
            return Err(Error::Config("augment_batch must be at least 1".into()));
        }
        if self.max_decode_len == 0 {
            return Err(Error::Config("max_decode_len must be at least 1".into()));
        }
        Ok(())
    }

    /// Step size for a model with embedding width `embed_dim`.
    pub fn effective_learning_rate(&self, embed_dim: usize) -> f64 {
        if self.reference_width == 0 || embed_dim == 0 {
            self.learning_rate
        } else {
            self.learning_rate * self.reference_width as f64 / embed_dim as f64
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }
}
