use crate::adaptation::normalize_log;
use crate::captioner::{CaptionerParams, Utterance};
use crate::error::{Error, Result};

/// Scores `utterance` against every context member and picks the most
/// likely one under a uniform prior. Ties go to the lowest index.
pub fn listener_choose(
    params: &CaptionerParams,
    utterance: &Utterance,
    context: &[&[f64]],
) -> Result<(usize, Vec<f64>)> {
    if context.is_empty() {
        return Err(Error::Input("listener needs a non-empty context".into()));
    }
    let lps = context
        .iter()
        .map(|f| params.utterance_logprob(f, utterance))
        .collect::<Result<Vec<_>>>()?;
    let posterior = normalize_log(&lps);
    Ok((argmax(&posterior), posterior))
}

/// Index of the largest value, the lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
