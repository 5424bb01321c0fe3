use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Paired sign test on per-game differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SignTest {
    pub positive: usize,
    pub negative: usize,
    pub ties: usize,
    /// One-sided p-value for a positive median difference.
    pub p_value: f64,
}

/// Monte-Carlo sign test: untied signs are flipped at random `resamples`
/// times and the p-value is `(1 + #{simulated >= observed}) / (1 + resamples)`.
pub fn sign_test(diffs: &[f64], resamples: usize, seed: u64) -> Result<SignTest> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Input("sign test needs finite differences".into()));
    }
    let positive = diffs.iter().filter(|&&d| d > 0.0).count();
    let negative = diffs.iter().filter(|&&d| d < 0.0).count();
    let ties = diffs.len() - positive - negative;
    let n = positive + negative;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let at_least = (0..resamples)
        .filter(|_| (0..n).filter(|_| rng.gen_bool(0.5)).count() >= positive)
        .count();
    Ok(SignTest {
        positive,
        negative,
        ties,
        p_value: (1 + at_least) as f64 / (1 + resamples) as f64,
    })
}
