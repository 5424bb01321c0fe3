//! Game summaries: by-repetition series with bootstrap intervals, word
//! overlap, likelihood curves, forgetting on held-out contexts, and a
//! paired sign test.

mod curves;
mod forgetting;
mod report;
mod series;
mod sign;

pub use curves::{likelihood_curves, LikelihoodCurves};
pub use forgetting::{
    forgetting_eval, heldout_accuracy, heldout_items, ForgettingReport, HeldOutItem,
};
pub use report::MetricsReport;
pub use series::{
    accuracy_by_repetition, by_repetition, length_by_repetition, overlap, overlap_by_repetition,
    per_game, target_posterior_by_repetition, Bootstrap, RepetitionPoint, RepetitionSeries,
};
pub use sign::{sign_test, SignTest};
