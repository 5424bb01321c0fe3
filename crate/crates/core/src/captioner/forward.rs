use super::params::slot;
use super::{CaptionerParams, Utterance};
use crate::error::{Error, Result};
use crate::numerics::{
    cell_backward, cell_step_unchecked, log_softmax, CellCache, GradientSet, CELL_TENSORS,
};
use crate::world::{TokenId, BOS};

/// Teacher-forced forward pass, retained for backpropagation.
#[derive(Debug, Clone)]
pub struct SequenceTrace {
    features: Vec<f64>,
    initial: Vec<f64>,
    inputs: Vec<TokenId>,
    caches: Vec<CellCache>,
    states: Vec<Vec<f64>>,
    /// Log next-token distribution at each position.
    pub log_probs: Vec<Vec<f64>>,
}

impl SequenceTrace {
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }
}

impl CaptionerParams {
    fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.dims.feature_dim {
            return Err(Error::Config(format!(
                "object has {} features, encoder expects {}",
                features.len(),
                self.dims.feature_dim
            )));
        }
        Ok(())
    }

    /// Initial decoder state `tanh(W f + b)`.
    pub fn encode(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_features(features)?;
        Ok(self.encode_unchecked(features))
    }

    pub(crate) fn encode_unchecked(&self, features: &[f64]) -> Vec<f64> {
        let mut h = self.encoder_bias.data().to_vec();
        self.encoder_weight.matvec_add(features, &mut h);
        h.iter_mut().for_each(|v| *v = v.tanh());
        h
    }

    /// One decoder step from `state` after reading `token`.
    pub(crate) fn advance(&self, state: &[f64], token: TokenId) -> (Vec<f64>, CellCache, Vec<f64>) {
        let (next, cache) = cell_step_unchecked(&self.cell, self.embedding.row(token), state);
        let mut logits = self.output_bias.data().to_vec();
        self.output_weight.matvec_add(&next, &mut logits);
        let lp = log_softmax(&logits);
        (next, cache, lp)
    }

    pub fn trace(&self, features: &[f64], inputs: &[TokenId]) -> Result<SequenceTrace> {
        self.check_features(features)?;
        if let Some(&t) = inputs.iter().find(|&&t| t >= self.dims.vocab_size) {
            return Err(Error::Input(format!("token {t} outside vocabulary")));
        }
        let initial = self.encode_unchecked(features);
        let mut state = initial.clone();
        let mut caches = Vec::with_capacity(inputs.len());
        let mut states = Vec::with_capacity(inputs.len());
        let mut log_probs = Vec::with_capacity(inputs.len());
        for &tok in inputs {
            let (next, cache, lp) = self.advance(&state, tok);
            caches.push(cache);
            states.push(next.clone());
            log_probs.push(lp);
            state = next;
        }
        Ok(SequenceTrace {
            features: features.to_vec(),
            initial,
            inputs: inputs.to_vec(),
            caches,
            states,
            log_probs,
        })
    }

    /// Trace that scores `utterance` (inputs are BOS followed by all but the
    /// last token).
    pub fn trace_utterance(
        &self,
        features: &[f64],
        utterance: &Utterance,
    ) -> Result<SequenceTrace> {
        let mut inputs = Vec::with_capacity(utterance.len());
        inputs.push(BOS);
        inputs.extend_from_slice(&utterance.tokens()[..utterance.len() - 1]);
        self.trace(features, &inputs)
    }

    /// Accumulates into `grads` given `dlogits[t]`, the derivative of some
    /// scalar with respect to the logits at step `t`. Encoder gradients are
    /// skipped while the encoder is frozen.
    pub fn backward(&self, trace: &SequenceTrace, dlogits: &[Vec<f64>], grads: &mut GradientSet) {
        debug_assert_eq!(dlogits.len(), trace.steps());
        let hdim = self.dims.hidden_dim;
        let mut carry = vec![0.0; hdim];
        for t in (0..trace.steps()).rev() {
            let dl = &dlogits[t];
            grads.tensors[slot::OUTPUT_WEIGHT].add_outer(dl, &trace.states[t]);
            grads.tensors[slot::OUTPUT_BIAS].add_slice(dl);
            self.output_weight.matvec_t_add(dl, &mut carry);

            let cell_grads = &mut grads.tensors[slot::CELL..slot::CELL + CELL_TENSORS];
            let (dx, dh) = cell_backward(&self.cell, &trace.caches[t], &carry, cell_grads);
            grads.tensors[slot::EMBEDDING]
                .row_mut(trace.inputs[t])
                .iter_mut()
                .zip(&dx)
                .for_each(|(g, d)| *g += d);
            carry = dh;
        }
        if !self.encoder_frozen {
            let da: Vec<f64> = carry
                .iter()
                .zip(&trace.initial)
                .map(|(g, h)| g * (1.0 - h * h))
                .collect();
            grads.tensors[slot::ENCODER_WEIGHT].add_outer(&da, &trace.features);
            grads.tensors[slot::ENCODER_BIAS].add_slice(&da);
        }
    }

    /// Next-token distribution after `prefix` (content tokens, BOS implied).
    pub fn next_token_dist(&self, features: &[f64], prefix: &[TokenId]) -> Result<Vec<f64>> {
        let mut inputs = Vec::with_capacity(prefix.len() + 1);
        inputs.push(BOS);
        inputs.extend_from_slice(prefix);
        let trace = self.trace(features, &inputs)?;
        Ok(trace
            .log_probs
            .last()
            .expect("at least one step")
            .iter()
            .map(|lp| lp.exp())
            .collect())
    }

    /// `log P(u | o)`: the sum of next-token log-probabilities, EOS included.
    pub fn utterance_logprob(&self, features: &[f64], utterance: &Utterance) -> Result<f64> {
        let trace = self.trace_utterance(features, utterance)?;
        Ok(sum_logprob(&trace, utterance))
    }

    /// Adds `scale * d/dθ log P(u | o)` to `grads` and returns `log P(u | o)`.
    pub fn accumulate_logprob_grad(
        &self,
        features: &[f64],
        utterance: &Utterance,
        scale: f64,
        grads: &mut GradientSet,
    ) -> Result<f64> {
        let trace = self.trace_utterance(features, utterance)?;
        let lp = sum_logprob(&trace, utterance);
        if scale != 0.0 {
            let dlogits = logprob_dlogits(&trace, utterance, scale);
            self.backward(&trace, &dlogits, grads);
        }
        Ok(lp)
    }
}

pub(crate) fn sum_logprob(trace: &SequenceTrace, utterance: &Utterance) -> f64 {
    trace
        .log_probs
        .iter()
        .zip(utterance.tokens())
        .map(|(lp, &w)| lp[w])
        .sum()
}

/// `scale * (onehot(w_t) - p_t)` at each step.
pub(crate) fn logprob_dlogits(
    trace: &SequenceTrace,
    utterance: &Utterance,
    scale: f64,
) -> Vec<Vec<f64>> {
    trace
        .log_probs
        .iter()
        .zip(utterance.tokens())
        .map(|(lp, &w)| {
            let mut d: Vec<f64> = lp.iter().map(|l| -scale * l.exp()).collect();
            d[w] += scale;
            d
        })
        .collect()
}
