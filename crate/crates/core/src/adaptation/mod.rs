//! Per-trial adaptation: sub-phrase augmentation, likelihood and contrastive
//! terms, the KL anchor to the frozen snapshot, and local rehearsal.

mod augment;
mod config;
mod losses;
mod regularizer;
mod rehearsal;
mod update;

pub use augment::{augment, augment_text, noun_phrases, AugmentMode, AugmentationSet};
pub use config::{AdaptationConfig, Coefficients, Optimizer, REFERENCE_WIDTH};
pub use losses::{contrastive_loss, normalize_log, posterior, utterance_loss};
pub use regularizer::{kl_regularizer, MapCache};
pub use rehearsal::{init_buffer, Observation, RehearsalBuffer};
pub use update::{update_step, OptimizerState, UpdateReport};
