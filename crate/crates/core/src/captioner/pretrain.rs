use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CaptionerParams, FrozenSnapshot, ModelDims, Utterance};
use crate::error::{Error, Result};
use crate::numerics::{ascent_step, GradientSet, Parameters};
use crate::world::{realize_one, DomainPool, ObjectId, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusItem {
    pub object: ObjectId,
    pub caption: Utterance,
}

/// `captions_per_object` grammar captions for every pool object.
pub fn build_corpus(
    pool: &DomainPool,
    vocab: &Vocabulary,
    captions_per_object: usize,
    seed: u64,
) -> Vec<CorpusItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Vec::with_capacity(pool.len() * captions_per_object);
    for o in &pool.objects {
        for _ in 0..captions_per_object {
            let content = realize_one(o, &pool.schema, vocab, &mut rng);
            corpus.push(CorpusItem {
                object: o.id,
                caption: Utterance::from_content(&content).expect("grammar captions are valid"),
            });
        }
    }
    corpus
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub init_scale: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden_dim: 64,
            max_epochs: 40,
            batch_size: 32,
            learning_rate: 0.1,
            momentum: 0.9,
            init_scale: 1.0,
            patience: 4,
            validation_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub best_epoch: usize,
    pub train_size: usize,
    pub validation_size: usize,
}

/// Mean caption negative log-likelihood and its gradient (of the mean
/// log-likelihood) over `items`.
pub fn batch_gradient(
    params: &CaptionerParams,
    pool: &DomainPool,
    items: &[&CorpusItem],
) -> Result<(f64, GradientSet)> {
    const CHUNK: usize = 8;
    let parts: Vec<Result<(f64, GradientSet)>> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = GradientSet::zeros_like(params);
            let mut total = 0.0;
            for item in chunk {
                let f = &pool.get(item.object)?.features;
                total += params.accumulate_logprob_grad(f, &item.caption, 1.0, &mut g)?;
            }
            Ok((total, g))
        })
        .collect();
    let mut grads = GradientSet::zeros_like(params);
    let mut total = 0.0;
    for part in parts {
        let (lp, g) = part?;
        total += lp;
        grads.add_scaled(&g, 1.0);
    }
    let n = items.len().max(1) as f64;
    grads.scale(1.0 / n);
    Ok((-total / n, grads))
}

pub fn mean_nll(params: &CaptionerParams, pool: &DomainPool, items: &[&CorpusItem]) -> Result<f64> {
    let lps: Vec<Result<f64>> = items
        .par_iter()
        .map(|item| params.utterance_logprob(&pool.get(item.object)?.features, &item.caption))
        .collect();
    let mut total = 0.0;
    for lp in lps {
        total += lp?;
    }
    Ok(-total / items.len().max(1) as f64)
}

/// Fits the captioner to `corpus` by minibatch gradient descent with
/// momentum, keeping the parameters with the best validation loss. The
/// returned parameters have their encoder frozen.
pub fn pretrain(
    corpus: &[CorpusItem],
    pool: &DomainPool,
    vocab: &Vocabulary,
    config: &PretrainConfig,
    seed: u64,
) -> Result<(CaptionerParams, FrozenSnapshot, PretrainReport)> {
    if corpus.is_empty() {
        return Err(Error::Input("pretraining corpus is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<&CorpusItem> = corpus.iter().collect();
    order.shuffle(&mut rng);
    let n_val = ((corpus.len() as f64) * config.validation_fraction).round() as usize;
    let n_val = n_val.min(corpus.len() - 1);
    let (validation, train) = order.split_at(n_val);
    let mut train = train.to_vec();

    let dims = ModelDims {
        feature_dim: pool.schema.feature_dim(),
        embed_dim: config.embed_dim,
        hidden_dim: config.hidden_dim,
        vocab_size: vocab.len(),
    };
    let mut params = CaptionerParams::random(dims, config.init_scale, &mut rng);
    let mut velocity = GradientSet::zeros_like(&params);
    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut report = PretrainReport {
        train_loss: Vec::new(),
        validation_loss: Vec::new(),
        best_epoch: 0,
        train_size: train.len(),
        validation_size: validation.len(),
    };

    for epoch in 0..config.max_epochs {
        train.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (bi, batch) in train.chunks(config.batch_size.max(1)).enumerate() {
            let (loss, grads) = batch_gradient(&params, pool, batch)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Training {
                    epoch,
                    batch: bi,
                    detail: format!("loss {loss}, gradient norm {}", grads.norm()),
                });
            }
            velocity.scale(config.momentum);
            velocity.add_scaled(&grads, 1.0);
            ascent_step(&mut params, &velocity, config.learning_rate)?;
            epoch_loss += loss * batch.len() as f64;
        }
        report.train_loss.push(epoch_loss / train.len() as f64);
        let val = if validation.is_empty() {
            report.train_loss[epoch]
        } else {
            mean_nll(&params, pool, validation)?
        };
        if !val.is_finite() {
            return Err(Error::Training {
                epoch,
                batch: 0,
                detail: format!("validation loss {val}"),
            });
        }
        report.validation_loss.push(val);
        if val < best_val {
            best_val = val;
            best = params.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= config.patience {
            break;
        }
    }
    report.best_epoch = best_epoch;
    best.encoder_frozen = true;
    debug_assert!(best.all_finite());
    let snapshot = FrozenSnapshot::capture(&best);
    Ok((best, snapshot, report))
}
