use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::captioner::Utterance;
use crate::error::{Error, Result};
use crate::world::{Context, DomainPool, ObjectId, ObjectSpec, Vocabulary};

pub const MAX_REPETITION: usize = 6;

/// Simulated human partner following the caption grammar.
///
/// As speaker it opens with the full template caption and drops one word per
/// repetition (the determiner first, then modifiers that do not help
/// distinguish the target) until only a minimal distinguishing phrase is
/// left. As listener it applies literal attribute semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedPartner {
    pub seed: u64,
}

/// Which words the partner will use for one target, and in which order it
/// drops them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionPlan {
    /// Modifier slots that together with the head noun single out the target.
    pub kept: Vec<usize>,
    /// Droppable words in drop order: `None` is the determiner, `Some(s)` the
    /// modifier of slot `s`.
    pub drops: Vec<Option<usize>>,
}

impl ScriptedPartner {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn rng_for(&self, target: ObjectId, context: &Context) -> ChaCha8Rng {
        let mut salt = 0u64;
        for b in context.id.bytes() {
            salt = salt.wrapping_mul(131).wrapping_add(b as u64);
        }
        ChaCha8Rng::seed_from_u64(self.seed ^ (u64::from(target.0) << 32) ^ salt)
    }

    pub fn plan(
        &self,
        target: ObjectId,
        context: &Context,
        pool: &DomainPool,
    ) -> Result<ReductionPlan> {
        let pos = context
            .position(target)
            .ok_or_else(|| Error::Input(format!("{target} is not in context {}", context.id)))?;
        let objects = members(context, pool)?;
        let head = pool.schema.head_slot();
        let modifiers: Vec<usize> = (0..pool.schema.slots.len())
            .filter(|&s| s != head)
            .collect();
        let mut rng = self.rng_for(target, context);

        let mut kept = None;
        for size in 0..=modifiers.len() {
            let mut fitting: Vec<Vec<usize>> = subsets(&modifiers, size)
                .into_iter()
                .filter(|s| {
                    let mut slots = s.clone();
                    slots.push(head);
                    consistent(&objects, &objects[pos].values, &slots).len() == 1
                })
                .collect();
            if !fitting.is_empty() {
                fitting.sort();
                kept = Some(fitting.swap_remove(rng.gen_range(0..fitting.len())));
                break;
            }
        }
        let kept = kept.ok_or_else(|| {
            Error::Input(format!(
                "{target} cannot be singled out in context {}",
                context.id
            ))
        })?;
        let mut droppable: Vec<usize> = modifiers
            .iter()
            .copied()
            .filter(|s| !kept.contains(s))
            .collect();
        droppable.shuffle(&mut rng);
        let mut drops = vec![None];
        drops.extend(droppable.into_iter().map(Some));
        Ok(ReductionPlan { kept, drops })
    }

    /// The partner's description of `target` at `repetition` (1-based).
    pub fn speak(
        &self,
        target: ObjectId,
        context: &Context,
        pool: &DomainPool,
        vocab: &Vocabulary,
        repetition: usize,
    ) -> Result<Utterance> {
        if !(1..=MAX_REPETITION).contains(&repetition) {
            return Err(Error::Input(format!(
                "repetition {repetition} outside 1..={MAX_REPETITION}"
            )));
        }
        let plan = self.plan(target, context, pool)?;
        let dropped = &plan.drops[..(repetition - 1).min(plan.drops.len())];
        let object = pool.get(target)?;
        let mut tokens = Vec::new();
        if !dropped.contains(&None) {
            tokens.push(vocab.the());
        }
        for (slot, &value) in object.values.iter().enumerate() {
            if !dropped.contains(&Some(slot)) {
                tokens.push(vocab.attribute_token(slot, value));
            }
        }
        Utterance::from_content(&tokens)
    }

    /// Positions of the members consistent with every attribute word of
    /// `utterance`; all members when none fit.
    pub fn literal_candidates(
        &self,
        utterance: &Utterance,
        context: &Context,
        pool: &DomainPool,
        vocab: &Vocabulary,
    ) -> Result<Vec<usize>> {
        let objects = members(context, pool)?;
        let mut slots = Vec::new();
        let mut values = vec![usize::MAX; pool.schema.slots.len()];
        let mut contradictory = false;
        for &t in utterance.content() {
            if let Some((slot, value)) = vocab.value_of(t) {
                if values[slot] != usize::MAX && values[slot] != value {
                    contradictory = true;
                }
                values[slot] = value;
                slots.push(slot);
            }
        }
        let fits = if contradictory {
            Vec::new()
        } else {
            consistent(&objects, &values, &slots)
        };
        Ok(if fits.is_empty() {
            (0..objects.len()).collect()
        } else {
            fits
        })
    }

    /// Uniform distribution over [`Self::literal_candidates`].
    pub fn literal_posterior(
        &self,
        utterance: &Utterance,
        context: &Context,
        pool: &DomainPool,
        vocab: &Vocabulary,
    ) -> Result<Vec<f64>> {
        let fits = self.literal_candidates(utterance, context, pool, vocab)?;
        let mut post = vec![0.0; context.members.len()];
        for &i in &fits {
            post[i] = 1.0 / fits.len() as f64;
        }
        Ok(post)
    }

    /// Literal reading: the unique member consistent with every attribute
    /// word, otherwise a seeded uniform draw from the consistent members (all
    /// members when none fit).
    pub fn listen(
        &self,
        utterance: &Utterance,
        context: &Context,
        pool: &DomainPool,
        vocab: &Vocabulary,
        trial_seed: u64,
    ) -> Result<ObjectId> {
        let fits = self.literal_candidates(utterance, context, pool, vocab)?;
        if fits.len() == 1 {
            return Ok(context.members[fits[0]]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.seed
                .wrapping_add(trial_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
        );
        Ok(context.members[fits[rng.gen_range(0..fits.len())]])
    }
}

fn members<'a>(context: &Context, pool: &'a DomainPool) -> Result<Vec<&'a ObjectSpec>> {
    context.members.iter().map(|&m| pool.get(m)).collect()
}

/// Positions of the objects whose values agree with `values` on `slots`.
fn consistent(objects: &[&ObjectSpec], values: &[usize], slots: &[usize]) -> Vec<usize> {
    (0..objects.len())
        .filter(|&i| slots.iter().all(|&s| objects[i].values[s] == values[s]))
        .collect()
}

fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    if size == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in subsets(&items[i + 1..], size - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}
