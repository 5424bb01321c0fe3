use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kmeans::{squared_distance, Clustering};
use super::{DomainPool, ObjectId};
use crate::error::{Error, Result};

pub const CONTEXT_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextKind {
    Challenging,
    Simple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub id: String,
    pub members: Vec<ObjectId>,
    pub kind: ContextKind,
}

impl Context {
    pub fn new(
        id: impl Into<String>,
        members: Vec<ObjectId>,
        kind: ContextKind,
        pool: &DomainPool,
    ) -> Result<Self> {
        let ctx = Self {
            id: id.into(),
            members,
            kind,
        };
        ctx.validate(pool)?;
        Ok(ctx)
    }

    pub fn validate(&self, pool: &DomainPool) -> Result<()> {
        if self.members.len() != CONTEXT_SIZE {
            return Err(Error::Input(format!(
                "context {} has {} members, expected {CONTEXT_SIZE}",
                self.id,
                self.members.len()
            )));
        }
        for (i, m) in self.members.iter().enumerate() {
            pool.get(*m)?;
            if self.members[..i].contains(m) {
                return Err(Error::Input(format!("context {} repeats {m}", self.id)));
            }
        }
        Ok(())
    }

    pub fn position(&self, id: ObjectId) -> Option<usize> {
        self.members.iter().position(|&m| m == id)
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.members.contains(&id)
    }

    /// Mean number of shared slot values over member pairs.
    pub fn mean_shared_slots(&self, pool: &DomainPool) -> f64 {
        let objs: Vec<_> = self
            .members
            .iter()
            .map(|&m| &pool.objects[m.index()])
            .collect();
        let slots = pool.schema.slots.len();
        let mut total = 0.0;
        let mut pairs = 0.0;
        for i in 0..objs.len() {
            for j in i + 1..objs.len() {
                total += (slots - objs[i].slot_distance(objs[j])) as f64;
                pairs += 1.0;
            }
        }
        total / pairs
    }
}

/// Samples a cluster and one of its members, then adds the member's three
/// nearest neighbours in `space` (one point per pool object). Distance ties
/// go to the lower object id.
pub fn build_challenging_context_in(
    pool: &DomainPool,
    space: &[Vec<f64>],
    clusters: &Clustering,
    seed: u64,
) -> Result<Context> {
    if pool.len() < CONTEXT_SIZE {
        return Err(Error::Input(format!(
            "pool of {} cannot fill a context of {CONTEXT_SIZE}",
            pool.len()
        )));
    }
    if space.len() != pool.len() || clusters.assignments.len() != pool.len() {
        return Err(Error::Input(
            "feature space or clustering does not cover the pool".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let non_empty: Vec<usize> = (0..clusters.k())
        .filter(|&c| clusters.assignments.contains(&c))
        .collect();
    let cluster = non_empty[rng.gen_range(0..non_empty.len())];
    let members = clusters.members(cluster);
    let anchor = members[rng.gen_range(0..members.len())];

    let mut others: Vec<(f64, usize)> = (0..pool.len())
        .filter(|&i| i != anchor)
        .map(|i| (squared_distance(&space[anchor], &space[i]), i))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut ids = vec![ObjectId(anchor as u32)];
    ids.extend(
        others
            .iter()
            .take(CONTEXT_SIZE - 1)
            .map(|&(_, i)| ObjectId(i as u32)),
    );
    Context::new(format!("c{seed}"), ids, ContextKind::Challenging, pool)
}

/// Challenging context in the pool's own one-hot feature space.
pub fn build_challenging_context(
    pool: &DomainPool,
    clusters: &Clustering,
    seed: u64,
) -> Result<Context> {
    build_challenging_context_in(pool, &pool.feature_table(), clusters, seed)
}

/// Four objects with pairwise-distinct head nouns.
pub fn build_simple_context(pool: &DomainPool, seed: u64) -> Result<Context> {
    let head = pool.schema.head_slot();
    let mut by_shape: Vec<Vec<ObjectId>> = vec![Vec::new(); pool.schema.head().values.len()];
    for o in &pool.objects {
        by_shape[o.values[head]].push(o.id);
    }
    let present: Vec<usize> = (0..by_shape.len())
        .filter(|&s| !by_shape[s].is_empty())
        .collect();
    if present.len() < CONTEXT_SIZE {
        return Err(Error::Input(format!(
            "pool has only {} distinct head nouns",
            present.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes: Vec<usize> = present
        .choose_multiple(&mut rng, CONTEXT_SIZE)
        .copied()
        .collect();
    let members = shapes
        .into_iter()
        .map(|s| *by_shape[s].choose(&mut rng).expect("non-empty"))
        .collect();
    Context::new(format!("s{seed}"), members, ContextKind::Simple, pool)
}
