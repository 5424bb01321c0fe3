//! Batch workflows over many seeded games: replay ablations and the paired
//! forgetting comparison. Games run in parallel; results keep seed order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{replay, run_selfplay, GameEnv, ReplayVariant, SelfPlayConfig, Transcript};
use crate::metrics::{forgetting_eval, heldout_items, likelihood_curves, sign_test, SignTest};
use crate::world::ObjectId;

/// Agents re-run against recorded games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AblationVariant {
    /// The configuration the game was recorded under.
    Full,
    /// No contrastive term, in the main objective or in rehearsal.
    NoPragmatics,
    NoRehearsal,
    /// No updates at all.
    Frozen,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 4] = [
        Self::Full,
        Self::NoPragmatics,
        Self::NoRehearsal,
        Self::Frozen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::NoPragmatics => "no-pragmatics",
            Self::NoRehearsal => "no-rehearsal",
            Self::Frozen => "frozen",
        }
    }

    pub fn replay_variant(self, transcript: &Transcript) -> ReplayVariant {
        let mut v = ReplayVariant::recorded(transcript);
        match self {
            Self::Full => {}
            Self::NoPragmatics => {
                v.adaptation.coefficients.contrastive = 0.0;
                v.adaptation.rehearsal_contrastive = false;
            }
            Self::NoRehearsal => v.adaptation.coefficients.rehearsal = 0.0,
            Self::Frozen => v.adapt = false,
        }
        v
    }
}

impl fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown variant {s}")))
    }
}

/// One variant's listener performance averaged over games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AblationRow {
    pub variant: AblationVariant,
    pub games: usize,
    pub mean_target_posterior: f64,
    pub accuracy: f64,
    /// Accuracy over the last repetition block.
    pub final_accuracy: f64,
}

impl AblationRow {
    pub const TSV_HEADER: &'static str =
        "variant\tgames\tmeanTargetPosterior\taccuracy\tfinalAccuracy";

    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.variant,
            self.games,
            self.mean_target_posterior,
            self.accuracy,
            self.final_accuracy
        )
    }
}

pub fn ablation_tsv(rows: &[AblationRow]) -> String {
    let mut out = format!("{}\n", AblationRow::TSV_HEADER);
    for r in rows {
        out.push_str(&r.to_tsv());
        out.push('\n');
    }
    out
}

/// Replays every transcript under each variant, one row per variant in the
/// order given. Each game counts equally.
pub fn ablate(
    env: &GameEnv,
    transcripts: &[Transcript],
    variants: &[AblationVariant],
) -> Result<Vec<AblationRow>> {
    if transcripts.is_empty() {
        return Err(Error::Input(
            "ablation needs at least one transcript".into(),
        ));
    }
    variants
        .iter()
        .map(|&variant| {
            let per_game = transcripts
                .par_iter()
                .map(|t| {
                    let out = replay(env, t, &variant.replay_variant(t))?;
                    let members = &t.header.context.members;
                    let n = out.trials.len().max(1) as f64;
                    let last = out
                        .trials
                        .iter()
                        .map(|r| r.repetition_block)
                        .max()
                        .unwrap_or(0);
                    let finals: Vec<_> = out
                        .trials
                        .iter()
                        .filter(|r| r.repetition_block == last)
                        .collect();
                    Ok([
                        out.trials
                            .iter()
                            .map(|r| r.target_posterior(members))
                            .sum::<f64>()
                            / n,
                        out.trials.iter().filter(|r| r.correct).count() as f64 / n,
                        finals.iter().filter(|r| r.correct).count() as f64
                            / finals.len().max(1) as f64,
                    ])
                })
                .collect::<Result<Vec<[f64; 3]>>>()?;
            let g = per_game.len() as f64;
            let mean = |i: usize| per_game.iter().map(|r| r[i]).sum::<f64>() / g;
            Ok(AblationRow {
                variant,
                games: per_game.len(),
                mean_target_posterior: mean(0),
                accuracy: mean(1),
                final_accuracy: mean(2),
            })
        })
        .collect()
}

/// Held-out evaluation settings for the forgetting comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForgettingConfig {
    /// Simple contexts, disjoint from the adapting one, per game.
    pub heldout_contexts: usize,
    /// Pool objects outside the context whose captions are tracked.
    pub unseen_sample: usize,
    pub sign_test_resamples: usize,
}

impl Default for ForgettingConfig {
    fn default() -> Self {
        Self {
            heldout_contexts: 6,
            unseen_sample: 20,
            sign_test_resamples: 10_000,
        }
    }
}

/// One game played twice from the same seed, with and without the
/// regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ForgettingRow {
    pub seed: u64,
    pub baseline_accuracy: f64,
    pub accuracy_with_kl: f64,
    pub accuracy_without_kl: f64,
    /// Baseline minus adapted held-out accuracy.
    pub drop_with_kl: f64,
    pub drop_without_kl: f64,
    /// Mean log-likelihood lost on unseen objects' own captions.
    pub unseen_loss_with_kl: f64,
    pub unseen_loss_without_kl: f64,
}

impl ForgettingRow {
    pub const TSV_HEADER: &'static str = "seed\tbaselineAccuracy\taccuracyWithKl\taccuracyWithoutKl\tdropWithKl\tdropWithoutKl\tunseenLossWithKl\tunseenLossWithoutKl";

    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.seed,
            self.baseline_accuracy,
            self.accuracy_with_kl,
            self.accuracy_without_kl,
            self.drop_with_kl,
            self.drop_without_kl,
            self.unseen_loss_with_kl,
            self.unseen_loss_without_kl
        )
    }
}

/// Paired per-game rows plus a sign test on `dropWithoutKl - dropWithKl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ForgettingTable {
    pub rows: Vec<ForgettingRow>,
    pub sign_test: SignTest,
}

impl ForgettingTable {
    pub fn to_tsv(&self) -> String {
        let mut out = format!("{}\n", ForgettingRow::TSV_HEADER);
        for r in &self.rows {
            out.push_str(&r.to_tsv());
            out.push('\n');
        }
        out
    }

    pub fn mean(&self, f: impl Fn(&ForgettingRow) -> f64) -> f64 {
        self.rows.iter().map(f).sum::<f64>() / self.rows.len().max(1) as f64
    }
}

/// Plays one game under `selfplay` as given and once more with the
/// regularizer weight at zero, then scores both on the same held-out items.
pub fn forgetting_row(
    env: &GameEnv,
    selfplay: &SelfPlayConfig,
    config: &ForgettingConfig,
    seed: u64,
) -> Result<ForgettingRow> {
    let mut with_kl = selfplay.clone();
    with_kl.session.keep_snapshots = true;
    let mut without = with_kl.clone();
    without.session.adaptation.coefficients.kl_reg = 0.0;
    let a = run_selfplay(env, &with_kl, seed)?;
    let b = run_selfplay(env, &without, seed)?;
    let ctx = &a.transcript.header.context;
    let items = heldout_items(&env.pool, &env.vocab, ctx, config.heldout_contexts, seed)?;
    let fa = forgetting_eval(&a.final_params, env.snapshot(), &items, ctx, &env.pool)?;
    let fb = forgetting_eval(&b.final_params, env.snapshot(), &items, ctx, &env.pool)?;

    let outside = env.pool.len() - ctx.members.len();
    let wanted = config.unseen_sample.min(outside);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unseen = Vec::with_capacity(wanted);
    while unseen.len() < wanted {
        let id = ObjectId(rng.gen_range(0..env.pool.len() as u32));
        if !ctx.contains(id) && !unseen.contains(&id) {
            unseen.push(id);
        }
    }
    let ca = likelihood_curves(
        &a.transcript,
        &a.snapshots,
        &a.final_params,
        &env.cache,
        &env.pool,
        &unseen,
    )?;
    let cb = likelihood_curves(
        &b.transcript,
        &b.snapshots,
        &b.final_params,
        &env.cache,
        &env.pool,
        &unseen,
    )?;
    let loss = |u: &[f64]| u[0] - u[u.len() - 1];
    Ok(ForgettingRow {
        seed,
        baseline_accuracy: fa.baseline_accuracy,
        accuracy_with_kl: fa.adapted_accuracy,
        accuracy_without_kl: fb.adapted_accuracy,
        drop_with_kl: fa.drop,
        drop_without_kl: fb.drop,
        unseen_loss_with_kl: loss(&ca.unseen),
        unseen_loss_without_kl: loss(&cb.unseen),
    })
}

pub fn forgetting_table(
    env: &GameEnv,
    selfplay: &SelfPlayConfig,
    config: &ForgettingConfig,
    seeds: &[u64],
) -> Result<ForgettingTable> {
    if seeds.is_empty() {
        return Err(Error::Input("forgetting needs at least one game".into()));
    }
    let rows = seeds
        .par_iter()
        .map(|&s| forgetting_row(env, selfplay, config, s))
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = rows
        .iter()
        .map(|r| r.drop_without_kl - r.drop_with_kl)
        .collect();
    let sign_test = sign_test(&diffs, config.sign_test_resamples, 0)?;
    Ok(ForgettingTable { rows, sign_test })
}
