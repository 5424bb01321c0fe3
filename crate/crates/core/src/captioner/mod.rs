//! Conditional captioner: frozen affine encoder into a recurrent decoder.

mod checkpoint;
mod decode;
mod forward;
mod params;
mod pretrain;
mod utterance;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, FORMAT_VERSION, MANIFEST_FILE, WEIGHTS_FILE,
};
pub use decode::{rank_hypotheses, Hypothesis, DEFAULT_BEAM_WIDTH, DEFAULT_MAX_LEN};
pub use forward::SequenceTrace;
pub(crate) use forward::{logprob_dlogits, sum_logprob};
pub use params::{slot, CaptionerParams, FrozenSnapshot, ModelDims, TENSOR_NAMES};
pub use pretrain::{
    batch_gradient, build_corpus, mean_nll, pretrain, CorpusItem, PretrainConfig, PretrainReport,
};
pub use utterance::Utterance;
