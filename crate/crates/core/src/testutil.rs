//! Small deterministic worlds and models shared by unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adaptation::MapCache;
use crate::captioner::{CaptionerParams, FrozenSnapshot, ModelDims, Utterance};
use crate::numerics::{Parameters, Tensor};
use crate::world::{generate_domain, AttributeSchema, DomainPool, Slot, Vocabulary};

/// Three slots with eight values in all: a 14-token vocabulary.
pub fn tiny_schema() -> AttributeSchema {
    let slot = |name: &str, values: &[&str], p: f64| Slot {
        name: name.into(),
        values: values.iter().map(|s| s.to_string()).collect(),
        mention_prob: p,
    };
    AttributeSchema {
        slots: vec![
            slot("size", &["small", "big"], 0.5),
            slot("color", &["red", "blue"], 0.5),
            slot("shape", &["square", "circle", "star", "heart"], 1.0),
        ],
        determiner_prob: 0.5,
    }
}

pub struct Fixture {
    pub pool: DomainPool,
    pub vocab: Vocabulary,
    pub snapshot: FrozenSnapshot,
    pub cache: MapCache,
}

pub fn fixture(seed: u64) -> Fixture {
    let schema = tiny_schema();
    let vocab = Vocabulary::from_schema(&schema);
    let pool = generate_domain(&schema, 16, seed).unwrap();
    let dims = ModelDims {
        feature_dim: schema.feature_dim(),
        embed_dim: 5,
        hidden_dim: 8,
        vocab_size: vocab.len(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = CaptionerParams::random(dims, 1.5, &mut rng);
    for t in theta.tensors_mut() {
        if t.data().iter().all(|&v| v == 0.0) {
            *t = Tensor::uniform(t.shape(), 0.5, &mut rng);
        }
    }
    let snapshot = FrozenSnapshot::capture(&theta);
    let cache = MapCache::build(&snapshot, &pool, 6).unwrap();
    Fixture {
        pool,
        vocab,
        snapshot,
        cache,
    }
}

pub fn perturbed(params: &CaptionerParams, scale: f64, seed: u64) -> CaptionerParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = params.clone();
    for t in p.tensors_mut() {
        for v in t.data_mut() {
            *v += rng.gen_range(-scale..scale);
        }
    }
    p
}

pub fn random_utterance(vocab: usize, rng: &mut ChaCha8Rng) -> Utterance {
    let len = rng.gen_range(1..4);
    let content: Vec<usize> = (0..len).map(|_| rng.gen_range(3..vocab)).collect();
    Utterance::from_content(&content).unwrap()
}
