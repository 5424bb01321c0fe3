use rand::seq::index;
use rand::Rng;

use crate::captioner::{CaptionerParams, FrozenSnapshot, Utterance};
use crate::error::{Error, Result};
use crate::numerics::GradientSet;
use crate::world::{DomainPool, ObjectId, TokenId, BOS};

#[derive(Debug, Clone)]
struct MapEntry {
    caption: Utterance,
    inputs: Vec<TokenId>,
    /// The snapshot's log next-token distribution at each caption position.
    log_probs: Vec<Vec<f64>>,
}

/// Greedy captions of every pool object under a frozen snapshot, with the
/// snapshot's next-token distributions along them. Built once, read-only.
#[derive(Debug, Clone)]
pub struct MapCache {
    snapshot: FrozenSnapshot,
    entries: Vec<MapEntry>,
    features: Vec<Vec<f64>>,
}

impl MapCache {
    pub fn build(snapshot: &FrozenSnapshot, pool: &DomainPool, max_len: usize) -> Result<Self> {
        let theta = snapshot.params();
        let mut entries = Vec::with_capacity(pool.len());
        for obj in &pool.objects {
            let caption = theta.greedy_decode(&obj.features, max_len)?;
            let mut inputs = vec![BOS];
            inputs.extend_from_slice(&caption.tokens()[..caption.len() - 1]);
            let trace = theta.trace(&obj.features, &inputs)?;
            entries.push(MapEntry {
                caption,
                inputs,
                log_probs: trace.log_probs,
            });
        }
        Ok(Self {
            snapshot: snapshot.clone(),
            entries,
            features: pool.feature_table(),
        })
    }

    pub fn snapshot(&self) -> &FrozenSnapshot {
        &self.snapshot
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The snapshot's greedy caption for `id`.
    pub fn caption(&self, id: ObjectId) -> Result<&Utterance> {
        self.entry(id).map(|e| &e.caption)
    }

    fn entry(&self, id: ObjectId) -> Result<&MapEntry> {
        self.entries
            .get(id.index())
            .ok_or_else(|| Error::Internal(format!("map cache has no entry for {id}")))
    }

    /// Draws `size` distinct pool objects (all of them if the pool is smaller).
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Vec<ObjectId> {
        let n = self.entries.len();
        let mut ids: Vec<ObjectId> = index::sample(rng, n, size.min(n))
            .into_iter()
            .map(|i| ObjectId(i as u32))
            .collect();
        ids.sort();
        ids
    }
}

/// Mean over `sample` of `Σ_i KL(P_Θ(·|o, w*_<i) ‖ P_θ(·|o, w*_<i))` along
/// each object's cached MAP caption, and the gradient of that mean.
pub fn kl_regularizer(
    params: &CaptionerParams,
    snapshot: &FrozenSnapshot,
    cache: &MapCache,
    sample: &[ObjectId],
) -> Result<(f64, GradientSet)> {
    let mut grads = GradientSet::zeros_like(params);
    let value = accumulate_kl(params, snapshot, cache, sample, 1.0, &mut grads)?;
    Ok((value, grads))
}

/// Adds `scale * ∇KL` to `grads` and returns the regularizer value.
pub(crate) fn accumulate_kl(
    params: &CaptionerParams,
    snapshot: &FrozenSnapshot,
    cache: &MapCache,
    sample: &[ObjectId],
    scale: f64,
    grads: &mut GradientSet,
) -> Result<f64> {
    if cache.snapshot != *snapshot {
        return Err(Error::Internal(format!(
            "map cache was built from snapshot {}, not {}",
            cache.snapshot.hash(),
            snapshot.hash()
        )));
    }
    if sample.is_empty() {
        return Ok(0.0);
    }
    let weight = 1.0 / sample.len() as f64;
    let mut total = 0.0;
    for &id in sample {
        let entry = cache.entry(id)?;
        let trace = params.trace(&cache.features[id.index()], &entry.inputs)?;
        let mut dlogits = Vec::with_capacity(entry.inputs.len());
        for (lp, lq) in entry.log_probs.iter().zip(&trace.log_probs) {
            let mut kl = 0.0;
            let mut d = Vec::with_capacity(lp.len());
            for (&a, &b) in lp.iter().zip(lq) {
                let p = a.exp();
                let q = b.exp();
                if p > 0.0 {
                    kl += p * (a - b);
                }
                d.push(scale * weight * (q - p));
            }
            total += kl.max(0.0);
            dlogits.push(d);
        }
        if scale != 0.0 {
            params.backward(&trace, &dlogits, grads);
        }
    }
    Ok(total * weight)
}
