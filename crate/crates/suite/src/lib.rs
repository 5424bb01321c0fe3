//! Pinned tolerances of the acceptance suite in `tests/acceptance.rs`.

pub const GRADCHECK_SEEDS: u64 = 100;
pub const GRADCHECK_HIDDEN: usize = 8;
pub const GRADCHECK_VOCAB: usize = 12;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
pub const GRADCHECK_BUDGET_SECS: f64 = 60.0;

pub const LEMMA_TOLERANCE: f64 = 1e-10;
pub const LEMMA_MAX_VOCAB: usize = 6;
pub const LEMMA_SEEDS: u64 = 100;

pub const ANCHOR_PERTURBATIONS: usize = 1000;

pub const BEAM_VOCAB: usize = 5;
pub const BEAM_MAX_LEN: usize = 4;
pub const BEAM_MODELS: u64 = 50;

pub const SANITY_TRIALS: u64 = 100;
pub const SANITY_MIN_IMPROVED: usize = 95;

pub const LISTENER_GAMES: u64 = 20;
pub const LISTENER_MIN_GAIN: f64 = 0.30;
pub const FROZEN_MAX_CHANGE: f64 = 0.10;

pub const FORGETTING_GAMES: u64 = 30;
pub const FORGETTING_HELDOUT_CONTEXTS: usize = 6;
pub const FORGETTING_UNSEEN_SAMPLE: usize = 20;
pub const SIGN_TEST_ALPHA: f64 = 0.05;
pub const SIGN_TEST_RESAMPLES: usize = 10_000;

pub const ABLATION_GAMES: u64 = 20;

pub const SPEAKER_GAMES: u64 = 20;
pub const AUGMENTED_MIN_SHORTENING: f64 = 0.30;
pub const UNAUGMENTED_MAX_SHORTENING: f64 = 0.10;
pub const LENGTH_PENALTY: f64 = 0.5;

pub const DETERMINISM_GAMES: u64 = 5;
