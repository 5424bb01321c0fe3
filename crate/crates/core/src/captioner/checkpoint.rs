//! Checkpoints: a versioned text manifest plus a flat little-endian `f64`
//! payload, written as `manifest.txt` and `weights.bin` in one directory.
//!
//! ```text
//! refgame-checkpoint 1
//! dims <feature> <embed> <hidden> <vocab>
//! encoder_frozen <true|false>
//! tensor <name> <dim>...
//! ```
//!
//! Tensors appear in the payload in manifest order.

use std::fs;
use std::path::Path;

use super::params::TENSOR_NAMES;
use super::{CaptionerParams, ModelDims};
use crate::error::{Error, Result};
use crate::numerics::{Parameters, Tensor};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "refgame-checkpoint";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const WEIGHTS_FILE: &str = "weights.bin";

pub fn save_checkpoint(params: &CaptionerParams, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let d = params.dims;
    let mut manifest = format!(
        "{MAGIC} {FORMAT_VERSION}\ndims {} {} {} {}\nencoder_frozen {}\n",
        d.feature_dim, d.embed_dim, d.hidden_dim, d.vocab_size, params.encoder_frozen
    );
    let mut payload = Vec::with_capacity(params.parameter_count() * 8);
    for (name, t) in TENSOR_NAMES.iter().zip(params.tensors()) {
        let shape: Vec<String> = t.shape().iter().map(|s| s.to_string()).collect();
        manifest.push_str(&format!("tensor {name} {}\n", shape.join(" ")));
        for v in t.data() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, manifest).map_err(|e| Error::io(&mpath, e))?;
    let wpath = dir.join(WEIGHTS_FILE);
    fs::write(&wpath, payload).map_err(|e| Error::io(&wpath, e))
}

pub fn load_checkpoint(dir: &Path) -> Result<CaptionerParams> {
    let mpath = dir.join(MANIFEST_FILE);
    let manifest = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let wpath = dir.join(WEIGHTS_FILE);
    let payload = fs::read(&wpath).map_err(|e| Error::io(&wpath, e))?;
    parse(&manifest, &payload)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(format!("checkpoint: {}", msg.into()))
}

fn parse(manifest: &str, payload: &[u8]) -> Result<CaptionerParams> {
    let mut lines = manifest.lines();
    let header = lines.next().ok_or_else(|| bad("empty manifest"))?;
    match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        [MAGIC, v] if v.parse::<u32>().ok() == Some(FORMAT_VERSION) => {}
        _ => return Err(bad(format!("unsupported header {header:?}"))),
    }
    let nums = |line: Option<&str>, key: &str| -> Result<Vec<String>> {
        let line = line.ok_or_else(|| bad(format!("missing {key}")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(bad(format!("expected {key}, got {line:?}")));
        }
        Ok(parts.map(str::to_string).collect())
    };
    let dims: Vec<usize> = nums(lines.next(), "dims")?
        .iter()
        .map(|s| s.parse().map_err(|_| bad("bad dims")))
        .collect::<Result<_>>()?;
    let [feature_dim, embed_dim, hidden_dim, vocab_size] = dims[..] else {
        return Err(bad("dims needs four values"));
    };
    let frozen = match nums(lines.next(), "encoder_frozen")?.as_slice() {
        [v] if v == "true" => true,
        [v] if v == "false" => false,
        _ => return Err(bad("bad encoder_frozen")),
    };
    let mut params = CaptionerParams::zeros(ModelDims {
        feature_dim,
        embed_dim,
        hidden_dim,
        vocab_size,
    });
    params.encoder_frozen = frozen;

    let mut offset = 0;
    let tensors = params.tensors_mut();
    let count = tensors.len();
    for (i, t) in tensors.into_iter().enumerate() {
        let fields = nums(lines.next(), "tensor")?;
        let (name, shape) = fields
            .split_first()
            .ok_or_else(|| bad("tensor line without name"))?;
        if name != TENSOR_NAMES[i] {
            return Err(bad(format!(
                "expected tensor {}, found {name}",
                TENSOR_NAMES[i]
            )));
        }
        let shape: Vec<usize> = shape
            .iter()
            .map(|s| s.parse().map_err(|_| bad("bad shape")))
            .collect::<Result<_>>()?;
        if shape != t.shape() {
            return Err(bad(format!("{name} shape {shape:?} disagrees with dims")));
        }
        let n = t.len();
        let bytes = payload
            .get(offset..offset + n * 8)
            .ok_or_else(|| bad("payload too short"))?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        *t = Tensor::from_vec(&shape, data)?;
        offset += n * 8;
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(bad(format!("manifest lists more than {count} tensors")));
    }
    if offset != payload.len() {
        return Err(bad("payload has trailing bytes"));
    }
    params.validate()?;
    Ok(params)
}
