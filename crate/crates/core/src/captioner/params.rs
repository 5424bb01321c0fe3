use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{CellParams, Parameters, Tensor, CELL_TENSORS};

/// Positions of each tensor in [`Parameters::tensors`] order.
pub mod slot {
    pub const ENCODER_WEIGHT: usize = 0;
    pub const ENCODER_BIAS: usize = 1;
    pub const EMBEDDING: usize = 2;
    pub const CELL: usize = 3;
    pub const OUTPUT_WEIGHT: usize = CELL + super::CELL_TENSORS;
    pub const OUTPUT_BIAS: usize = OUTPUT_WEIGHT + 1;
    pub const COUNT: usize = OUTPUT_BIAS + 1;
}

pub const TENSOR_NAMES: [&str; slot::COUNT] = [
    "encoder.weight",
    "encoder.bias",
    "embedding",
    "cell.w_update",
    "cell.w_reset",
    "cell.w_candidate",
    "cell.u_update",
    "cell.u_reset",
    "cell.u_candidate",
    "cell.b_update",
    "cell.b_reset",
    "cell.b_candidate",
    "output.weight",
    "output.bias",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub feature_dim: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub vocab_size: usize,
}

impl ModelDims {
    /// Desk-scale defaults for the 23-feature, 29-word world. Full-scale
    /// captioners use a 300-wide word embedding.
    pub fn desk(feature_dim: usize, vocab_size: usize) -> Self {
        Self {
            feature_dim,
            embed_dim: 32,
            hidden_dim: 64,
            vocab_size,
        }
    }
}

/// Weights of the conditional captioner.
///
/// The affine encoder maps object features to the decoder's initial state.
/// After pretraining it is frozen; only the embeddings, recurrent cell and
/// output projection adapt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionerParams {
    pub dims: ModelDims,
    pub encoder_weight: Tensor,
    pub encoder_bias: Tensor,
    pub embedding: Tensor,
    pub cell: CellParams,
    pub output_weight: Tensor,
    pub output_bias: Tensor,
    pub encoder_frozen: bool,
}

impl CaptionerParams {
    pub fn zeros(dims: ModelDims) -> Self {
        Self {
            dims,
            encoder_weight: Tensor::zeros(&[dims.hidden_dim, dims.feature_dim]),
            encoder_bias: Tensor::zeros(&[dims.hidden_dim]),
            embedding: Tensor::zeros(&[dims.vocab_size, dims.embed_dim]),
            cell: CellParams::zeros(dims.embed_dim, dims.hidden_dim),
            output_weight: Tensor::zeros(&[dims.vocab_size, dims.hidden_dim]),
            output_bias: Tensor::zeros(&[dims.vocab_size]),
            encoder_frozen: false,
        }
    }

    pub fn random<R: Rng + ?Sized>(dims: ModelDims, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(dims);
        p.encoder_weight = Tensor::uniform(
            &[dims.hidden_dim, dims.feature_dim],
            scale / (dims.feature_dim as f64).sqrt(),
            rng,
        );
        p.embedding = Tensor::uniform(&[dims.vocab_size, dims.embed_dim], scale, rng);
        p.cell = CellParams::random(dims.embed_dim, dims.hidden_dim, rng);
        if scale != 1.0 {
            for t in p.cell.tensors_mut() {
                t.scale(scale);
            }
        }
        p.output_weight = Tensor::uniform(
            &[dims.vocab_size, dims.hidden_dim],
            scale / (dims.hidden_dim as f64).sqrt(),
            rng,
        );
        p
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims;
        let expect = |t: &Tensor, shape: &[usize], name: &str| {
            if t.shape() != shape {
                Err(Error::Config(format!(
                    "{name} has shape {:?}, expected {shape:?}",
                    t.shape()
                )))
            } else {
                Ok(())
            }
        };
        expect(
            &self.encoder_weight,
            &[d.hidden_dim, d.feature_dim],
            "encoder.weight",
        )?;
        expect(&self.encoder_bias, &[d.hidden_dim], "encoder.bias")?;
        expect(&self.embedding, &[d.vocab_size, d.embed_dim], "embedding")?;
        expect(
            &self.output_weight,
            &[d.vocab_size, d.hidden_dim],
            "output.weight",
        )?;
        expect(&self.output_bias, &[d.vocab_size], "output.bias")?;
        if self.cell.embed_dim != d.embed_dim || self.cell.hidden_dim != d.hidden_dim {
            return Err(Error::Config("cell dimensions disagree with model".into()));
        }
        self.cell.validate()
    }

    /// SHA-256 over the frozen flag and every tensor's little-endian bytes.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update([self.encoder_frozen as u8]);
        for t in self.tensors() {
            for v in t.data() {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

impl Parameters for CaptionerParams {
    fn tensors(&self) -> Vec<&Tensor> {
        let mut v = vec![&self.encoder_weight, &self.encoder_bias, &self.embedding];
        v.extend(self.cell.tensors());
        v.push(&self.output_weight);
        v.push(&self.output_bias);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![
            &mut self.encoder_weight,
            &mut self.encoder_bias,
            &mut self.embedding,
        ];
        v.extend(self.cell.tensors_mut());
        v.push(&mut self.output_weight);
        v.push(&mut self.output_bias);
        v
    }

    fn frozen_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; slot::COUNT];
        mask[slot::ENCODER_WEIGHT] = self.encoder_frozen;
        mask[slot::ENCODER_BIAS] = self.encoder_frozen;
        mask
    }
}

/// Read-only pretrained parameters that anchor adaptation.
///
/// Cloning shares the same allocation.
#[derive(Debug, Clone)]
pub struct FrozenSnapshot {
    params: Arc<CaptionerParams>,
    hash: String,
}

impl FrozenSnapshot {
    pub fn capture(params: &CaptionerParams) -> Self {
        let mut p = params.clone();
        p.encoder_frozen = true;
        let hash = p.hash();
        Self {
            params: Arc::new(p),
            hash,
        }
    }

    pub fn params(&self) -> &CaptionerParams {
        &self.params
    }

    /// Hash recorded at capture time.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Recomputes the hash and compares it with the one taken at capture.
    pub fn verify(&self) -> bool {
        self.params.hash() == self.hash
    }

    /// A fresh, mutable copy for a new partner.
    pub fn fork(&self) -> CaptionerParams {
        (*self.params).clone()
    }
}

impl PartialEq for FrozenSnapshot {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && self.params == other.params
    }
}
