use serde::{Deserialize, Serialize};

use crate::captioner::{
    CaptionerParams, Hypothesis, Utterance, DEFAULT_BEAM_WIDTH, DEFAULT_MAX_LEN,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeakerConfig {
    pub beam_width: usize,
    pub max_len: usize,
    /// Candidates considered by the length-penalty re-ranker.
    pub top_k: usize,
    /// `β_w`; 0 keeps the plain beam ranking.
    pub length_penalty: f64,
}

impl Default for SpeakerConfig {
    fn default() -> Self {
        Self {
            beam_width: DEFAULT_BEAM_WIDTH,
            max_len: DEFAULT_MAX_LEN,
            top_k: 25,
            length_penalty: 0.0,
        }
    }
}

impl SpeakerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 || self.max_len == 0 {
            return Err(Error::Config(
                "beam width and max_len must be at least 1".into(),
            ));
        }
        if self.top_k == 0 || self.top_k > self.beam_width {
            return Err(Error::Config(format!(
                "top_k must lie in 1..={}, got {}",
                self.beam_width, self.top_k
            )));
        }
        if !(self.length_penalty >= 0.0 && self.length_penalty.is_finite()) {
            return Err(Error::Config(format!(
                "length penalty must be finite and >= 0, got {}",
                self.length_penalty
            )));
        }
        Ok(())
    }
}

/// `score - β_w * length`, length counting EOS.
pub fn penalized_utility(h: &Hypothesis, length_penalty: f64) -> f64 {
    h.score - length_penalty * h.utterance.len() as f64
}

/// Beam search on `P(u | o)`, optionally re-ranking the `top_k` best by
/// [`penalized_utility`]. Ties keep the beam order.
pub fn speaker_produce(
    params: &CaptionerParams,
    features: &[f64],
    config: &SpeakerConfig,
) -> Result<Utterance> {
    config.validate()?;
    let hyps = params.beam_decode(features, config.beam_width, config.max_len)?;
    if hyps.is_empty() {
        return Err(Error::Internal("beam search returned no hypotheses".into()));
    }
    if config.length_penalty == 0.0 {
        return Ok(hyps[0].utterance.clone());
    }
    let mut best = 0;
    let top = &hyps[..config.top_k.min(hyps.len())];
    for (i, h) in top.iter().enumerate() {
        if penalized_utility(h, config.length_penalty)
            > penalized_utility(&top[best], config.length_penalty)
        {
            best = i;
        }
    }
    Ok(top[best].utterance.clone())
}
