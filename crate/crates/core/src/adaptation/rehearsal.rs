use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::captioner::{CaptionerParams, Utterance};
use crate::error::{Error, Result};
use crate::world::{Context, DomainPool, ObjectId};

/// A referring utterance paired with its intended object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub utterance: Utterance,
    pub target: ObjectId,
    pub context_id: String,
    pub trial_index: usize,
}

/// Append-only interaction history of one game.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RehearsalBuffer {
    entries: Vec<Observation>,
    contexts: Vec<Context>,
}

impl RehearsalBuffer {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    pub fn context(&self, id: &str) -> Option<&Context> {
        self.contexts.iter().find(|c| c.id == id)
    }

    /// Appends `obs`; its target must belong to `context`.
    pub fn push(&mut self, obs: Observation, context: &Context) -> Result<()> {
        if obs.context_id != context.id || !context.contains(obs.target) {
            return Err(Error::Input(format!(
                "observation of {} in {} does not fit context {}",
                obs.target, obs.context_id, context.id
            )));
        }
        match self.context(&context.id) {
            Some(known) if known != context => {
                return Err(Error::Input(format!(
                    "context id {} reused with other members",
                    context.id
                )));
            }
            Some(_) => {}
            None => self.contexts.push(context.clone()),
        }
        self.entries.push(obs);
        Ok(())
    }

    /// Uniform draws with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Vec<&Observation> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        (0..size)
            .map(|_| &self.entries[rng.gen_range(0..self.entries.len())])
            .collect()
    }
}

/// Seeds the history with the model's own greedy caption for every context
/// member, tagged trial 0.
pub fn init_buffer(
    params: &CaptionerParams,
    context: &Context,
    pool: &DomainPool,
    max_len: usize,
) -> Result<RehearsalBuffer> {
    let mut buffer = RehearsalBuffer::default();
    for &id in &context.members {
        let utterance = params.greedy_decode(&pool.get(id)?.features, max_len)?;
        buffer.push(
            Observation {
                utterance,
                target: id,
                context_id: context.id.clone(),
                trial_index: 0,
            },
            context,
        )?;
    }
    Ok(buffer)
}
