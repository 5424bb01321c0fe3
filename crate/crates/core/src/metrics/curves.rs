use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptation::MapCache;
use crate::captioner::{CaptionerParams, Utterance};
use crate::error::{Error, Result};
use crate::game::Transcript;
use crate::world::{DomainPool, ObjectId};

/// Mean caption log-likelihoods under the parameters in effect before each
/// trial, plus a final point for the end-of-game parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LikelihoodCurves {
    /// The snapshot's own captions of the context members.
    pub initial_targets: Vec<f64>,
    /// The snapshot's own captions of objects outside the context.
    pub unseen: Vec<f64>,
    /// End-of-game greedy captions of the context members.
    pub final_targets: Vec<f64>,
}

impl LikelihoodCurves {
    pub fn len(&self) -> usize {
        self.initial_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial_targets.is_empty()
    }
}

/// Tracks how the likelihood of three caption sets moves over a game.
/// `snapshots[t]` holds the parameters at the start of trial `t`.
pub fn likelihood_curves(
    transcript: &Transcript,
    snapshots: &[CaptionerParams],
    final_params: &CaptionerParams,
    cache: &MapCache,
    pool: &DomainPool,
    unseen: &[ObjectId],
) -> Result<LikelihoodCurves> {
    if snapshots.len() != transcript.records.len() {
        return Err(Error::Input(format!(
            "{} snapshots for {} trials; enable snapshots when playing the game",
            snapshots.len(),
            transcript.records.len()
        )));
    }
    if transcript.header.snapshot_hash != cache.snapshot().hash() {
        return Err(Error::Input(
            "transcript was recorded against a different model".into(),
        ));
    }
    let members = &transcript.header.context.members;
    if let Some(id) = unseen.iter().find(|id| members.contains(id)) {
        return Err(Error::Input(format!("{id} is in the adapting context")));
    }
    let max_len = transcript.header.adaptation.max_decode_len;
    let initial = pairs(members, |id| cache.caption(id).cloned(), pool)?;
    let unseen_pairs = pairs(unseen, |id| cache.caption(id).cloned(), pool)?;
    let finals = pairs(
        members,
        |id| final_params.greedy_decode(&pool.get(id)?.features, max_len),
        pool,
    )?;

    let states: Vec<&CaptionerParams> = snapshots
        .iter()
        .chain(std::iter::once(final_params))
        .collect();
    let points = states
        .par_iter()
        .map(|p| {
            Ok((
                mean_logprob(p, &initial)?,
                mean_logprob(p, &unseen_pairs)?,
                mean_logprob(p, &finals)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LikelihoodCurves {
        initial_targets: points.iter().map(|p| p.0).collect(),
        unseen: points.iter().map(|p| p.1).collect(),
        final_targets: points.iter().map(|p| p.2).collect(),
    })
}

fn pairs<'a>(
    ids: &[ObjectId],
    caption: impl Fn(ObjectId) -> Result<Utterance>,
    pool: &'a DomainPool,
) -> Result<Vec<(&'a [f64], Utterance)>> {
    ids.iter()
        .map(|&id| Ok((pool.get(id)?.features.as_slice(), caption(id)?)))
        .collect()
}

fn mean_logprob(params: &CaptionerParams, items: &[(&[f64], Utterance)]) -> Result<f64> {
    if items.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (f, u) in items {
        total += params.utterance_logprob(f, u)?;
    }
    Ok(total / items.len() as f64)
}
