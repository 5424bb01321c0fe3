use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{Context, ObjectId};

pub const DEFAULT_BLOCKS: usize = 6;

/// Trial order: every target once per block, never twice in a row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSchedule {
    pub targets: Vec<ObjectId>,
    pub blocks: usize,
    pub targets_per_block: usize,
}

impl TrialSchedule {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// 1-based repetition block of trial `t`.
    pub fn repetition(&self, t: usize) -> usize {
        t / self.targets_per_block + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.len() != self.blocks * self.targets_per_block {
            return Err(Error::Input(
                "schedule length is not blocks x targets".into(),
            ));
        }
        let first: Vec<ObjectId> = sorted(&self.targets[..self.targets_per_block]);
        for block in self.targets.chunks(self.targets_per_block) {
            if sorted(block) != first || first.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Input(
                    "a block does not visit every target exactly once".into(),
                ));
            }
        }
        if self.targets.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Input(
                "schedule repeats a target on consecutive trials".into(),
            ));
        }
        Ok(())
    }
}

fn sorted(ids: &[ObjectId]) -> Vec<ObjectId> {
    let mut v = ids.to_vec();
    v.sort();
    v
}

/// Uniform permutation per block; a block whose first target repeats the
/// previous trial's target is redrawn.
pub fn make_schedule(context: &Context, blocks: usize, seed: u64) -> Result<TrialSchedule> {
    let n = context.members.len();
    if blocks == 0 || n == 0 {
        return Err(Error::Input(
            "schedule needs at least one block and one target".into(),
        ));
    }
    if n == 1 && blocks > 1 {
        return Err(Error::Input(
            "a single target cannot avoid consecutive repeats".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets: Vec<ObjectId> = Vec::with_capacity(n * blocks);
    for _ in 0..blocks {
        loop {
            let mut block = context.members.clone();
            block.shuffle(&mut rng);
            if targets.last() != Some(&block[0]) {
                targets.extend(block);
                break;
            }
        }
    }
    Ok(TrialSchedule {
        targets,
        blocks,
        targets_per_block: n,
    })
}
