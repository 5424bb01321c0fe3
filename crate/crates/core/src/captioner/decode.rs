use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{CaptionerParams, Utterance};
use crate::error::{Error, Result};
use crate::world::{TokenId, BOS, EOS, UNK};

pub const DEFAULT_BEAM_WIDTH: usize = 50;
pub const DEFAULT_MAX_LEN: usize = 12;

/// A finished beam candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub utterance: Utterance,
    pub logprob: f64,
    /// `logprob / length`, length counting EOS.
    pub score: f64,
}

impl Hypothesis {
    fn new(tokens: Vec<TokenId>, logprob: f64) -> Self {
        let utterance =
            Utterance::from_tokens(tokens).expect("decoder emits EOS-terminated sequences");
        let score = logprob / utterance.len() as f64;
        Self {
            utterance,
            logprob,
            score,
        }
    }
}

/// Higher score first; ties go to the shorter, then lexicographically
/// smaller, sequence.
pub fn rank_hypotheses(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.utterance.len().cmp(&b.utterance.len()))
        .then_with(|| a.utterance.tokens().cmp(b.utterance.tokens()))
}

/// BOS and UNK are never produced.
fn speakable(token: TokenId) -> bool {
    token != BOS && token != UNK
}

impl CaptionerParams {
    /// Argmax decoding (ties to the lower token id). The last position is
    /// forced to EOS so the output always terminates within `max_len`.
    pub fn greedy_decode(&self, features: &[f64], max_len: usize) -> Result<Utterance> {
        if max_len == 0 {
            return Err(Error::Input("max_len must be at least 1".into()));
        }
        let mut state = self.encode(features)?;
        let mut tokens = Vec::new();
        let mut prev = BOS;
        loop {
            let (next, _, lp) = self.advance(&state, prev);
            state = next;
            let tok = if tokens.len() + 1 == max_len {
                EOS
            } else {
                let mut best = EOS;
                for t in 0..lp.len() {
                    if speakable(t) && lp[t] > lp[best] {
                        best = t;
                    }
                }
                best
            };
            tokens.push(tok);
            if tok == EOS {
                break;
            }
            prev = tok;
        }
        Utterance::from_tokens(tokens)
    }

    /// Beam search over `P(u | o)`.
    ///
    /// Each step expands every live hypothesis and keeps the `width` best
    /// extensions by cumulative log-probability; extensions ending in EOS
    /// leave the beam and are retained. Results are sorted by the
    /// length-normalized score.
    pub fn beam_decode(
        &self,
        features: &[f64],
        width: usize,
        max_len: usize,
    ) -> Result<Vec<Hypothesis>> {
        if width == 0 || max_len == 0 {
            return Err(Error::Input(
                "beam width and max_len must be at least 1".into(),
            ));
        }
        struct Live {
            tokens: Vec<TokenId>,
            logprob: f64,
            state: Vec<f64>,
        }
        let mut live = vec![Live {
            tokens: Vec::new(),
            logprob: 0.0,
            state: self.encode(features)?,
        }];
        let mut finished = Vec::new();
        while !live.is_empty() {
            let last_position = live[0].tokens.len() + 1 == max_len;
            let mut candidates: Vec<(f64, usize, TokenId)> = Vec::new();
            let mut next_states = Vec::with_capacity(live.len());
            for (hi, hyp) in live.iter().enumerate() {
                let prev = hyp.tokens.last().copied().unwrap_or(BOS);
                let (state, _, lp) = self.advance(&hyp.state, prev);
                next_states.push(state);
                for (t, &l) in lp.iter().enumerate() {
                    if !speakable(t) || (last_position && t != EOS) {
                        continue;
                    }
                    candidates.push((hyp.logprob + l, hi, t));
                }
            }
            candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            candidates.truncate(width);

            let mut next_live = Vec::new();
            for (logprob, hi, t) in candidates {
                let mut tokens = live[hi].tokens.clone();
                tokens.push(t);
                if t == EOS {
                    finished.push(Hypothesis::new(tokens, logprob));
                } else {
                    next_live.push(Live {
                        tokens,
                        logprob,
                        state: next_states[hi].clone(),
                    });
                }
            }
            live = next_live;
        }
        finished.sort_by(rank_hypotheses);
        Ok(finished)
    }
}
