//! Central finite-difference verification of every analytic gradient the
//! adaptation objective uses.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptation::{contrastive_loss, kl_regularizer, utterance_loss, MapCache};
use crate::captioner::{CaptionerParams, FrozenSnapshot, ModelDims, Utterance, TENSOR_NAMES};
use crate::error::{Error, Result};
use crate::numerics::{GradientSet, Parameters, Tensor};
use crate::world::{generate_domain, AttributeSchema, DomainPool, ObjectId, Slot, Vocabulary};

/// Two values per slot: a 12-token vocabulary.
pub fn small_schema() -> AttributeSchema {
    let slot = |name: &str, values: &[&str], mention_prob: f64| Slot {
        name: name.into(),
        values: values.iter().map(|s| s.to_string()).collect(),
        mention_prob,
    };
    AttributeSchema {
        slots: vec![
            slot("size", &["small", "big"], 0.5),
            slot("color", &["red", "blue"], 0.5),
            slot("shape", &["square", "circle"], 1.0),
        ],
        determiner_prob: 0.5,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradCheckConfig {
    pub schema: AttributeSchema,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub pool_size: usize,
    pub seeds: u64,
    pub epsilon: f64,
    pub tolerance: f64,
    /// Denominator floor of the relative error.
    pub floor: f64,
    /// Coordinates probed per tensor; all when unset.
    pub coords_per_tensor: Option<usize>,
    pub init_scale: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            schema: small_schema(),
            embed_dim: 5,
            hidden_dim: 8,
            pool_size: 8,
            seeds: 100,
            epsilon: 1e-5,
            tolerance: 1e-4,
            floor: 1e-6,
            coords_per_tensor: None,
            init_scale: 1.0,
        }
    }
}

impl GradCheckConfig {
    pub fn vocab_size(&self) -> usize {
        Vocabulary::from_schema(&self.schema).len()
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if self.pool_size < 4 {
            return Err(Error::Config(
                "gradient check needs a pool of at least 4 objects".into(),
            ));
        }
        if !(self.epsilon > 0.0 && self.tolerance > 0.0 && self.floor > 0.0) {
            return Err(Error::Config(
                "epsilon, tolerance and floor must be positive".into(),
            ));
        }
        if self.coords_per_tensor == Some(0) {
            return Err(Error::Config("coords_per_tensor must be at least 1".into()));
        }
        Ok(())
    }
}

/// The differentiated quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Objective {
    Likelihood,
    Contrastive,
    Regularizer,
}

pub const OBJECTIVES: [Objective; 3] = [
    Objective::Likelihood,
    Objective::Contrastive,
    Objective::Regularizer,
];

/// Worst relative error seen for one objective and tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TensorCheck {
    pub objective: Objective,
    pub tensor: String,
    pub coords: usize,
    pub max_rel_err: f64,
    pub worst_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GradCheckReport {
    pub seeds: u64,
    pub vocab_size: usize,
    pub hidden_dim: usize,
    pub tolerance: f64,
    pub max_rel_err: f64,
    pub rows: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err <= self.tolerance
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("objective\ttensor\tcoords\tmaxRelErr\tworstSeed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:?}\t{}\t{}\t{:e}\t{}\n",
                r.objective, r.tensor, r.coords, r.max_rel_err, r.worst_seed
            ));
        }
        out
    }
}

/// `|fd - an| / max(|fd|, |an|, floor)`.
pub fn relative_error(fd: f64, an: f64, floor: f64) -> f64 {
    (fd - an).abs() / fd.abs().max(an.abs()).max(floor)
}

/// Runs every objective on `config.seeds` random models, encoder included.
pub fn gradcheck(config: &GradCheckConfig) -> Result<GradCheckReport> {
    config.validate()?;
    let per_seed = (0..config.seeds)
        .into_par_iter()
        .map(|seed| check_seed(config, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<TensorCheck> = Vec::new();
    for (seed, checks) in per_seed.into_iter().enumerate() {
        for (objective, tensor, coords, err) in checks {
            match rows
                .iter_mut()
                .find(|r| r.objective == objective && r.tensor == tensor)
            {
                Some(r) => {
                    r.coords += coords;
                    if err > r.max_rel_err {
                        r.max_rel_err = err;
                        r.worst_seed = seed as u64;
                    }
                }
                None => rows.push(TensorCheck {
                    objective,
                    tensor: tensor.to_string(),
                    coords,
                    max_rel_err: err,
                    worst_seed: seed as u64,
                }),
            }
        }
    }
    let max_rel_err = rows.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    Ok(GradCheckReport {
        seeds: config.seeds,
        vocab_size: config.vocab_size(),
        hidden_dim: config.hidden_dim,
        tolerance: config.tolerance,
        max_rel_err,
        rows,
    })
}

type SeedChecks = Vec<(Objective, &'static str, usize, f64)>;

struct World {
    pool: DomainPool,
    snapshot: FrozenSnapshot,
    cache: MapCache,
    params: CaptionerParams,
}

fn random_model(dims: ModelDims, scale: f64, rng: &mut ChaCha8Rng) -> CaptionerParams {
    let mut p = CaptionerParams::random(dims, scale, rng);
    for t in p.tensors_mut() {
        if t.data().iter().all(|&v| v == 0.0) {
            *t = Tensor::uniform(t.shape(), 0.5 * scale, rng);
        }
    }
    p
}

fn world(config: &GradCheckConfig, seed: u64) -> Result<World> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = generate_domain(&config.schema, config.pool_size, seed)?;
    let dims = ModelDims {
        feature_dim: config.schema.feature_dim(),
        embed_dim: config.embed_dim,
        hidden_dim: config.hidden_dim,
        vocab_size: config.vocab_size(),
    };
    let snapshot = FrozenSnapshot::capture(&random_model(dims, config.init_scale, &mut rng));
    let cache = MapCache::build(&snapshot, &pool, 4)?;
    let mut params = snapshot.fork();
    params.encoder_frozen = false;
    for t in params.tensors_mut() {
        for v in t.data_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    Ok(World {
        pool,
        snapshot,
        cache,
        params,
    })
}

fn check_seed(config: &GradCheckConfig, seed: u64) -> Result<SeedChecks> {
    let w = world(config, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let vocab = config.vocab_size();
    let len = rng.gen_range(1..4);
    let content: Vec<usize> = (0..len).map(|_| rng.gen_range(3..vocab)).collect();
    let utterance = Utterance::from_content(&content)?;
    let ids: Vec<ObjectId> = index::sample(&mut rng, w.pool.len(), 4)
        .into_iter()
        .map(|i| ObjectId(i as u32))
        .collect();
    let feats: Vec<Vec<f64>> = ids
        .iter()
        .map(|&id| Ok(w.pool.get(id)?.features.clone()))
        .collect::<Result<_>>()?;
    let context: Vec<&[f64]> = feats.iter().map(Vec::as_slice).collect();
    let target = rng.gen_range(0..context.len());

    let likelihood = |p: &CaptionerParams| utterance_loss(p, &utterance, context[target]);
    let contrastive = |p: &CaptionerParams| contrastive_loss(p, &utterance, target, &context);
    let regularizer = |p: &CaptionerParams| kl_regularizer(p, &w.snapshot, &w.cache, &ids);

    let mut out = Vec::new();
    for objective in OBJECTIVES {
        let f: &dyn Fn(&CaptionerParams) -> Result<(f64, GradientSet)> = match objective {
            Objective::Likelihood => &likelihood,
            Objective::Contrastive => &contrastive,
            Objective::Regularizer => &regularizer,
        };
        let (_, grads) = f(&w.params)?;
        for (ti, g) in grads.tensors.iter().enumerate() {
            let coords: Vec<usize> = match config.coords_per_tensor {
                Some(n) if n < g.len() => index::sample(&mut rng, g.len(), n).into_vec(),
                _ => (0..g.len()).collect(),
            };
            let mut worst: f64 = 0.0;
            for &k in &coords {
                let mut plus = w.params.clone();
                plus.tensors_mut()[ti].data_mut()[k] += config.epsilon;
                let mut minus = w.params.clone();
                minus.tensors_mut()[ti].data_mut()[k] -= config.epsilon;
                let fd = (f(&plus)?.0 - f(&minus)?.0) / (2.0 * config.epsilon);
                worst = worst.max(relative_error(fd, g.data()[k], config.floor));
            }
            if !worst.is_finite() {
                return Err(Error::NumericalDomain(format!(
                    "non-finite gradient error in {}",
                    TENSOR_NAMES[ti]
                )));
            }
            out.push((objective, TENSOR_NAMES[ti], coords.len(), worst));
        }
    }
    Ok(out)
}
