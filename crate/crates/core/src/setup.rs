//! The world, corpus, pretrained model and game environment built from one
//! configuration, so every entry point reproduces the same stack.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::captioner::{
    build_corpus, load_checkpoint, pretrain, save_checkpoint, CaptionerParams, CorpusItem,
    FrozenSnapshot, PretrainConfig, PretrainReport, DEFAULT_MAX_LEN,
};
use crate::error::{Error, Result};
use crate::game::GameEnv;
use crate::world::{generate_domain, AttributeSchema, DomainPool, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub schema: AttributeSchema,
    pub pool_size: usize,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            schema: AttributeSchema::default(),
            pool_size: 500,
            seed: 1,
        }
    }
}

impl WorldConfig {
    pub fn build(&self) -> Result<(DomainPool, Vocabulary)> {
        let pool = generate_domain(&self.schema, self.pool_size, self.seed)?;
        let vocab = Vocabulary::from_schema(&self.schema);
        Ok((pool, vocab))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub captions_per_object: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            captions_per_object: 2,
            seed: 2,
        }
    }
}

/// Everything upstream of a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetupConfig {
    pub world: WorldConfig,
    pub corpus: CorpusConfig,
    pub pretrain: PretrainConfig,
    pub pretrain_seed: u64,
    /// Seeds the clustering behind challenging contexts.
    pub env_seed: u64,
    /// Length bound of the cached MAP captions.
    pub max_decode_len: usize,
}

impl Default for SetupConfig {
    fn default() -> Self {
        Self {
            world: WorldConfig::default(),
            corpus: CorpusConfig::default(),
            pretrain: PretrainConfig::default(),
            pretrain_seed: 3,
            env_seed: 4,
            max_decode_len: DEFAULT_MAX_LEN,
        }
    }
}

/// A pretrained model together with the world it was trained on.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub pool: DomainPool,
    pub vocab: Vocabulary,
    pub params: CaptionerParams,
    pub snapshot: FrozenSnapshot,
    /// Absent when loaded from a checkpoint.
    pub report: Option<PretrainReport>,
}

impl SetupConfig {
    pub fn validate(&self) -> Result<()> {
        self.world.schema.validate()?;
        if self.corpus.captions_per_object == 0 {
            return Err(Error::Config(
                "captions_per_object must be at least 1".into(),
            ));
        }
        if self.max_decode_len == 0 {
            return Err(Error::Config("max_decode_len must be at least 1".into()));
        }
        Ok(())
    }

    pub fn corpus(&self, pool: &DomainPool, vocab: &Vocabulary) -> Vec<CorpusItem> {
        build_corpus(
            pool,
            vocab,
            self.corpus.captions_per_object,
            self.corpus.seed,
        )
    }

    /// Builds the world and fits the captioner to its corpus.
    pub fn pretrain(&self) -> Result<Pretrained> {
        self.validate()?;
        let (pool, vocab) = self.world.build()?;
        let corpus = self.corpus(&pool, &vocab);
        let (params, snapshot, report) =
            pretrain(&corpus, &pool, &vocab, &self.pretrain, self.pretrain_seed)?;
        Ok(Pretrained {
            pool,
            vocab,
            params,
            snapshot,
            report: Some(report),
        })
    }

    /// Rebuilds the world and attaches a saved model to it.
    pub fn load(&self, checkpoint: &Path) -> Result<Pretrained> {
        self.validate()?;
        let (pool, vocab) = self.world.build()?;
        let params = load_checkpoint(checkpoint)?;
        let dims = params.dims;
        if dims.vocab_size != vocab.len() || dims.feature_dim != pool.schema.feature_dim() {
            return Err(Error::Config(format!(
                "checkpoint {} has vocabulary {} and features {}, world has {} and {}",
                checkpoint.display(),
                dims.vocab_size,
                dims.feature_dim,
                vocab.len(),
                pool.schema.feature_dim()
            )));
        }
        let snapshot = FrozenSnapshot::capture(&params);
        Ok(Pretrained {
            pool,
            vocab,
            params,
            snapshot,
            report: None,
        })
    }
}

impl Pretrained {
    pub fn save(&self, dir: &Path) -> Result<()> {
        save_checkpoint(&self.params, dir)
    }

    pub fn env(&self, config: &SetupConfig) -> Result<GameEnv> {
        GameEnv::new(
            self.pool.clone(),
            &self.snapshot,
            config.max_decode_len,
            config.env_seed,
        )
    }
}
