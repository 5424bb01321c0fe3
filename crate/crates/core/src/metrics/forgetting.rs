use serde::{Deserialize, Serialize};

use crate::agents::{listener_choose, ScriptedPartner};
use crate::captioner::{CaptionerParams, FrozenSnapshot, Utterance};
use crate::error::{Error, Result};
use crate::world::{build_simple_context, Context, DomainPool, ObjectId, Vocabulary};

/// One listener trial outside the adapting context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutItem {
    pub context: Context,
    pub target: ObjectId,
    pub utterance: Utterance,
}

/// Listener accuracy on held-out items before and after adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ForgettingReport {
    pub adapted_accuracy: f64,
    pub baseline_accuracy: f64,
    /// Baseline minus adapted accuracy.
    pub drop: f64,
    pub items: usize,
}

/// `contexts` simple contexts sharing no object with `adapting`, each member
/// described by the scripted partner's first-repetition caption.
pub fn heldout_items(
    pool: &DomainPool,
    vocab: &Vocabulary,
    adapting: &Context,
    contexts: usize,
    seed: u64,
) -> Result<Vec<HeldOutItem>> {
    let partner = ScriptedPartner::new(seed);
    let mut items = Vec::new();
    let mut built = 0;
    for attempt in 0.. {
        if built == contexts {
            break;
        }
        if attempt >= contexts * 100 + 100 {
            return Err(Error::Input(
                "could not build held-out contexts disjoint from the adapting one".into(),
            ));
        }
        let ctx = build_simple_context(
            pool,
            seed.wrapping_mul(0x9e37_79b9).wrapping_add(attempt as u64),
        )?;
        if ctx.members.iter().any(|&m| adapting.contains(m)) {
            continue;
        }
        for &target in &ctx.members {
            let utterance = partner.speak(target, &ctx, pool, vocab, 1)?;
            items.push(HeldOutItem {
                context: ctx.clone(),
                target,
                utterance,
            });
        }
        built += 1;
    }
    Ok(items)
}

/// Listener accuracy of `params` over `items`.
pub fn heldout_accuracy(
    params: &CaptionerParams,
    items: &[HeldOutItem],
    pool: &DomainPool,
) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::Input("no held-out items".into()));
    }
    let mut correct = 0usize;
    for item in items {
        let feats = item
            .context
            .members
            .iter()
            .map(|&m| pool.get(m).map(|o| o.features.as_slice()))
            .collect::<Result<Vec<_>>>()?;
        let (choice, _) = listener_choose(params, &item.utterance, &feats)?;
        correct += (item.context.members[choice] == item.target) as usize;
    }
    Ok(correct as f64 / items.len() as f64)
}

/// Compares `adapted` with the frozen snapshot on items that share no object
/// with the adapting context.
pub fn forgetting_eval(
    adapted: &CaptionerParams,
    snapshot: &FrozenSnapshot,
    items: &[HeldOutItem],
    adapting: &Context,
    pool: &DomainPool,
) -> Result<ForgettingReport> {
    if let Some(item) = items
        .iter()
        .find(|i| i.context.members.iter().any(|&m| adapting.contains(m)))
    {
        return Err(Error::Input(format!(
            "held-out context {} overlaps the adapting context",
            item.context.id
        )));
    }
    let adapted_accuracy = heldout_accuracy(adapted, items, pool)?;
    let baseline_accuracy = heldout_accuracy(snapshot.params(), items, pool)?;
    Ok(ForgettingReport {
        adapted_accuracy,
        baseline_accuracy,
        drop: baseline_accuracy - adapted_accuracy,
        items: items.len(),
    })
}
