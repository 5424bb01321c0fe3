use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::losses::accumulate_likelihood_terms;
use super::regularizer::accumulate_kl;
use super::{AdaptationConfig, AugmentationSet, MapCache, Observation, RehearsalBuffer};
use crate::captioner::{slot, CaptionerParams, Utterance};
use crate::error::{Error, Result};
use crate::numerics::{ascent_step, GradientSet, Parameters};
use crate::world::{Context, DomainPool};

/// What one `update_step` did.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub steps_applied: usize,
    /// Objective value before each applied step.
    pub objectives: Vec<f64>,
    /// Regularizer value before each applied step.
    pub kl: Vec<f64>,
    /// Diagnostics for steps that were rolled back.
    pub skipped: Vec<String>,
}

/// Per-game optimizer memory (Adam moments); unused under plain ascent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerState {
    first: Option<GradientSet>,
    second: Option<GradientSet>,
    steps: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl OptimizerState {
    /// Rescales `grads` in place into the Adam ascent direction.
    fn adam_direction(&mut self, grads: &mut GradientSet) {
        let first = self.first.get_or_insert_with(|| zeros_as(grads));
        let second = self.second.get_or_insert_with(|| zeros_as(grads));
        self.steps += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.steps as i32);
        let c2 = 1.0 - ADAM_BETA2.powi(self.steps as i32);
        for ((g, m), v) in grads
            .tensors
            .iter_mut()
            .zip(first.tensors.iter_mut())
            .zip(second.tensors.iter_mut())
        {
            for ((gi, mi), vi) in g.data_mut().iter_mut().zip(m.data_mut()).zip(v.data_mut()) {
                *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * *gi;
                *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * *gi * *gi;
                *gi = (*mi / c1) / ((*vi / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

fn zeros_as(grads: &GradientSet) -> GradientSet {
    GradientSet {
        tensors: grads.tensors.iter().map(|t| t.zeros_like()).collect(),
    }
}

/// Objective value and gradient at `params` for one gradient step.
#[allow(clippy::too_many_arguments)]
fn objective(
    params: &CaptionerParams,
    batch: &[&Utterance],
    target: usize,
    features: &[&[f64]],
    rehearsal: &[(&Utterance, usize, Vec<&[f64]>)],
    kl_sample: &[crate::world::ObjectId],
    cache: &MapCache,
    config: &AdaptationConfig,
) -> Result<(f64, f64, GradientSet)> {
    let lambda = &config.coefficients;
    let mut grads = GradientSet::zeros_like(params);
    let mut value = 0.0;
    if !batch.is_empty() && (lambda.utterance > 0.0 || lambda.contrastive > 0.0) {
        let w = 1.0 / batch.len() as f64;
        for u in batch {
            let terms = accumulate_likelihood_terms(
                params,
                u,
                target,
                features,
                w * lambda.utterance,
                w * lambda.contrastive,
                &mut grads,
            )?;
            value += w * lambda.utterance * terms.logprob;
            if lambda.contrastive > 0.0 {
                value += w * lambda.contrastive * terms.log_posterior;
            }
        }
    }
    if !rehearsal.is_empty() && lambda.rehearsal > 0.0 {
        let w = lambda.rehearsal / rehearsal.len() as f64;
        let c = if config.rehearsal_contrastive {
            lambda.contrastive
        } else {
            0.0
        };
        for (u, t, feats) in rehearsal {
            let terms = accumulate_likelihood_terms(
                params,
                u,
                *t,
                feats,
                w * lambda.utterance,
                w * c,
                &mut grads,
            )?;
            value += w * lambda.utterance * terms.logprob;
            if c > 0.0 {
                value += w * c * terms.log_posterior;
            }
        }
    }
    let mut kl = 0.0;
    if lambda.kl_reg > 0.0 {
        kl = accumulate_kl(
            params,
            cache.snapshot(),
            cache,
            kl_sample,
            -lambda.kl_reg,
            &mut grads,
        )?;
        value -= lambda.kl_reg * kl;
    }
    grads.tensors[slot::ENCODER_WEIGHT].fill(0.0);
    grads.tensors[slot::ENCODER_BIAS].fill(0.0);
    Ok((value, kl, grads))
}

/// Runs `config.steps_per_trial` ascent steps on the combined objective for
/// `obs`, then appends `obs` and its sub-phrases to `buffer`.
///
/// A step whose objective, gradient, or resulting parameters are not finite
/// is rolled back and reported in [`UpdateReport::skipped`].
#[allow(clippy::too_many_arguments)]
pub fn update_step(
    params: &mut CaptionerParams,
    optimizer: &mut OptimizerState,
    obs: &Observation,
    augmentations: &AugmentationSet,
    context: &Context,
    pool: &DomainPool,
    buffer: &mut RehearsalBuffer,
    config: &AdaptationConfig,
    cache: &MapCache,
    seed: u64,
) -> Result<UpdateReport> {
    config.validate()?;
    if augmentations.full() != &obs.utterance {
        return Err(Error::Input(
            "augmentation set does not belong to the observed utterance".into(),
        ));
    }
    if obs.context_id != context.id {
        return Err(Error::Input(format!(
            "observation refers to context {}, not {}",
            obs.context_id, context.id
        )));
    }
    let target = context
        .position(obs.target)
        .ok_or_else(|| Error::Input(format!("{} is not in context {}", obs.target, context.id)))?;
    let features: Vec<&[f64]> = context
        .members
        .iter()
        .map(|&m| pool.get(m).map(|o| o.features.as_slice()))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = UpdateReport::default();
    let phrases = augmentations.phrases();
    for step in 0..config.steps_per_trial {
        let extra = (config.augment_batch - 1).min(phrases.len());
        let mut batch: Vec<&Utterance> = vec![&obs.utterance];
        batch.extend(
            index::sample(&mut rng, phrases.len(), extra)
                .into_iter()
                .map(|i| &phrases[i]),
        );

        let mut rehearsal = Vec::new();
        for past in buffer.sample(config.rehearsal_batch, &mut rng) {
            let ctx = buffer.context(&past.context_id).ok_or_else(|| {
                Error::Internal(format!("buffer lost context {}", past.context_id))
            })?;
            let pos = ctx
                .position(past.target)
                .expect("buffer entries lie in their contexts");
            let feats = ctx
                .members
                .iter()
                .map(|&m| pool.get(m).map(|o| o.features.as_slice()))
                .collect::<Result<Vec<_>>>()?;
            rehearsal.push((&past.utterance, pos, feats));
        }
        let kl_sample = cache.sample(config.reg_pool_sample, &mut rng);

        let (value, kl, mut grads) = objective(
            params, &batch, target, &features, &rehearsal, &kl_sample, cache, config,
        )?;
        if !value.is_finite() || !grads.is_finite() {
            report
                .skipped
                .push(format!("step {step}: non-finite objective {value}"));
            continue;
        }
        let before = params.clone();
        let saved = optimizer.clone();
        if config.optimizer == super::Optimizer::Adam {
            optimizer.adam_direction(&mut grads);
        }
        ascent_step(
            params,
            &grads,
            config.effective_learning_rate(params.dims.embed_dim),
        )?;
        if !params.all_finite() {
            *params = before;
            *optimizer = saved;
            report.skipped.push(format!(
                "step {step}: update produced non-finite parameters"
            ));
            continue;
        }
        report.steps_applied += 1;
        report.objectives.push(value);
        report.kl.push(kl);
    }

    buffer.push(obs.clone(), context)?;
    for phrase in phrases {
        buffer.push(
            Observation {
                utterance: phrase.clone(),
                ..obs.clone()
            },
            context,
        )?;
    }
    Ok(report)
}
