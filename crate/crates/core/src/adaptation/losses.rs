use crate::captioner::{logprob_dlogits, sum_logprob, CaptionerParams, Utterance};
use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, GradientSet};

/// `-log P(u | o)` and its gradient.
pub fn utterance_loss(
    params: &CaptionerParams,
    utterance: &Utterance,
    features: &[f64],
) -> Result<(f64, GradientSet)> {
    let mut grads = GradientSet::zeros_like(params);
    let lp = params.accumulate_logprob_grad(features, utterance, -1.0, &mut grads)?;
    Ok((-lp, grads))
}

/// `-log P(o_target | u, C)` under a uniform prior over `context` and its
/// gradient.
pub fn contrastive_loss(
    params: &CaptionerParams,
    utterance: &Utterance,
    target: usize,
    context: &[&[f64]],
) -> Result<(f64, GradientSet)> {
    let mut grads = GradientSet::zeros_like(params);
    let lp =
        accumulate_likelihood_terms(params, utterance, target, context, 0.0, -1.0, &mut grads)?;
    Ok((-lp.log_posterior, grads))
}

/// Posterior over `context` given `utterance`, uniform prior.
pub fn posterior(
    params: &CaptionerParams,
    utterance: &Utterance,
    context: &[&[f64]],
) -> Result<Vec<f64>> {
    let lps = context
        .iter()
        .map(|f| params.utterance_logprob(f, utterance))
        .collect::<Result<Vec<_>>>()?;
    Ok(normalize_log(&lps))
}

/// `exp(l_i - logsumexp(l))`.
pub fn normalize_log(log_weights: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(log_weights);
    log_weights.iter().map(|l| (l - z).exp()).collect()
}

/// Values of the two likelihood terms for one utterance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LikelihoodTerms {
    pub logprob: f64,
    pub log_posterior: f64,
}

/// Adds `a * ∇ log P(u|o_t) + c * ∇ log P(o_t | u, C)` to `grads`, sharing one
/// trace per context member.
pub(crate) fn accumulate_likelihood_terms(
    params: &CaptionerParams,
    utterance: &Utterance,
    target: usize,
    context: &[&[f64]],
    a: f64,
    c: f64,
    grads: &mut GradientSet,
) -> Result<LikelihoodTerms> {
    if target >= context.len() {
        return Err(Error::Input(format!(
            "target position {target} outside a context of {}",
            context.len()
        )));
    }
    if c == 0.0 {
        let logprob = params.accumulate_logprob_grad(context[target], utterance, a, grads)?;
        return Ok(LikelihoodTerms {
            logprob,
            log_posterior: f64::NAN,
        });
    }
    let traces = context
        .iter()
        .map(|f| params.trace_utterance(f, utterance))
        .collect::<Result<Vec<_>>>()?;
    let lps: Vec<f64> = traces.iter().map(|t| sum_logprob(t, utterance)).collect();
    let post = normalize_log(&lps);
    let log_posterior = lps[target] - log_sum_exp(&lps);
    for (j, trace) in traces.iter().enumerate() {
        let own = if j == target { 1.0 } else { 0.0 };
        let scale = a * own + c * (own - post[j]);
        if scale != 0.0 {
            let dlogits = logprob_dlogits(trace, utterance, scale);
            params.backward(trace, &dlogits, grads);
        }
    }
    Ok(LikelihoodTerms {
        logprob: lps[target],
        log_posterior,
    })
}
