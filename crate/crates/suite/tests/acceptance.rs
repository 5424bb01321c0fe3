//! Acceptance criteria 1 to 10. Prints one PASS or FAIL line per criterion
//! and exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use anyhow::{ensure, Context as _, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use refgame::adaptation::{
    augment, init_buffer, kl_regularizer, update_step, AdaptationConfig, AugmentMode, Observation,
    OptimizerState,
};
use refgame::agents::ScriptedPartner;
use refgame::captioner::{CaptionerParams, ModelDims, Utterance};
use refgame::game::{
    replay, run_selfplay, GameEnv, ReplayOutcome, ReplayVariant, RoleConfig, SelfPlayConfig,
    SpeakerFeedback, Transcript,
};
use refgame::gradcheck::{gradcheck, GradCheckConfig};
use refgame::metrics::{
    forgetting_eval, heldout_items, length_by_repetition, likelihood_curves, overlap_by_repetition,
    sign_test, Bootstrap,
};
use refgame::numerics::{kl_categorical, Parameters, Tensor};
use refgame::setup::SetupConfig;
use refgame::world::{ContextKind, ObjectId, EOS};
use refgame_suite::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

type Check = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("gradient correctness", gradient_correctness),
        ("incremental KL decomposition", kl_decomposition),
        ("regularizer anchor", regularizer_anchor),
        ("beam oracle", beam_oracle),
        ("adaptation sanity", adaptation_sanity),
        ("listener improvement", listener_improvement),
        ("forgetting", forgetting),
        ("ablations", ablations),
        ("speaker efficiency and informativity", speaker_efficiency),
        ("determinism and replay", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {:<38} {}  ({:.1}s) {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn env() -> Result<&'static GameEnv> {
    static ENV: OnceLock<std::result::Result<GameEnv, String>> = OnceLock::new();
    ENV.get_or_init(|| {
        let setup = SetupConfig::default();
        setup
            .pretrain()
            .and_then(|p| p.env(&setup))
            .map_err(|e| e.to_string())
    })
    .as_ref()
    .map_err(|e| anyhow::anyhow!("pretraining failed: {e}"))
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

fn perturb(p: &CaptionerParams, scale: f64, rng: &mut ChaCha8Rng) -> CaptionerParams {
    let mut q = p.clone();
    for t in q.tensors_mut() {
        for v in t.data_mut() {
            *v += rng.gen_range(-scale..scale);
        }
    }
    q
}

fn features(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn gradient_correctness() -> Result<Outcome> {
    let config = GradCheckConfig {
        seeds: GRADCHECK_SEEDS,
        hidden_dim: GRADCHECK_HIDDEN,
        tolerance: GRADCHECK_TOLERANCE,
        ..GradCheckConfig::default()
    };
    ensure!(
        config.vocab_size() == GRADCHECK_VOCAB,
        "gradient check vocabulary is {}",
        config.vocab_size()
    );
    let started = Instant::now();
    let report = gradcheck(&config)?;
    let secs = started.elapsed().as_secs_f64();
    let coords: usize = report.rows.iter().map(|r| r.coords).sum();
    outcome(
        report.passed() && secs < GRADCHECK_BUDGET_SECS,
        format!(
            "max rel err {:.2e} <= {GRADCHECK_TOLERANCE:e} over {coords} coordinates, {} seeds, |V| {}, hidden {}; {secs:.1}s < {GRADCHECK_BUDGET_SECS}s",
            report.max_rel_err, report.seeds, report.vocab_size, report.hidden_dim
        ),
    )
}

/// Joint KL over all two-token chains, by enumeration and by decomposition.
fn chain_kls(
    p_marg: &[f64],
    p_cond: &[Vec<f64>],
    q_marg: &[f64],
    q_cond: &[Vec<f64>],
) -> Result<(f64, f64, f64)> {
    let mut joint = 0.0;
    for a in 0..p_marg.len() {
        for b in 0..p_marg.len() {
            let p = p_marg[a] * p_cond[a][b];
            if p > 0.0 {
                joint += p * (p.ln() - (q_marg[a] * q_cond[a][b]).ln());
            }
        }
    }
    let marginal = kl_categorical(p_marg, q_marg)?;
    let mut expected = 0.0;
    for a in 0..p_marg.len() {
        if p_marg[a] > 0.0 {
            expected += p_marg[a] * kl_categorical(&p_cond[a], &q_cond[a])?;
        }
    }
    Ok((joint, marginal, expected))
}

fn kl_decomposition() -> Result<Outcome> {
    let mut worst_identity: f64 = 0.0;
    let mut worst_map: f64 = 0.0;
    let mut worst_regularizer: f64 = 0.0;
    for seed in 0..LEMMA_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = 4 + (seed as usize % (LEMMA_MAX_VOCAB - 3));
        let dims = ModelDims {
            feature_dim: 4,
            embed_dim: 3,
            hidden_dim: 5,
            vocab_size: vocab,
        };
        let theta0 = random_model(dims, 1.5, &mut rng);
        let theta = perturb(&theta0, 0.5, &mut rng);
        let f = features(4, &mut rng);
        let dists = |m: &CaptionerParams| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
            let marg = m.next_token_dist(&f, &[])?;
            let cond = (0..vocab)
                .map(|a| m.next_token_dist(&f, &[a]))
                .collect::<refgame::Result<_>>()?;
            Ok((marg, cond))
        };
        let (pm, pc) = dists(&theta0)?;
        let (qm, qc) = dists(&theta)?;
        let (joint, marginal, expected) = chain_kls(&pm, &pc, &qm, &qc)?;
        worst_identity = worst_identity.max((joint - marginal - expected).abs());

        let star = rng.gen_range(0..vocab);
        let mut det = vec![0.0; vocab];
        det[star] = 1.0;
        let (_, _, exact) = chain_kls(&det, &pc, &qm, &qc)?;
        let single = kl_categorical(&pc[star], &qc[star])?;
        worst_map = worst_map.max((exact - single).abs());
    }

    let env = env()?;
    let snapshot = env.snapshot();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..20u32 {
        let theta = perturb(snapshot.params(), 0.05, &mut rng);
        let id = ObjectId(k * 7);
        let f = &env.pool.get(id)?.features;
        let caption = env.cache.caption(id)?;
        let (value, _) = kl_regularizer(&theta, snapshot, &env.cache, &[id])?;
        let mut along = 0.0;
        for i in 0..caption.len() {
            let prefix = &caption.tokens()[..i];
            along += kl_categorical(
                &snapshot.params().next_token_dist(f, prefix)?,
                &theta.next_token_dist(f, prefix)?,
            )?;
        }
        worst_regularizer = worst_regularizer.max((value - along).abs());
    }
    outcome(
        worst_identity <= LEMMA_TOLERANCE && worst_map <= LEMMA_TOLERANCE && worst_regularizer <= LEMMA_TOLERANCE,
        format!(
            "|joint - marginal - E[cond]| max {worst_identity:.1e}; deterministic first token {worst_map:.1e}; regularizer vs MAP chain {worst_regularizer:.1e}; all <= {LEMMA_TOLERANCE:e} over {LEMMA_SEEDS} models with |V| <= {LEMMA_MAX_VOCAB}"
        ),
    )
}

fn regularizer_anchor() -> Result<Outcome> {
    let env = env()?;
    let snapshot = env.snapshot();
    let sample: Vec<ObjectId> = env.pool.ids().step_by(10).collect();
    let (at_anchor, grads) = kl_regularizer(&snapshot.fork(), snapshot, &env.cache, &sample)?;
    let perturbed: Vec<f64> = (0..ANCHOR_PERTURBATIONS as u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scale = [1e-6, 1e-3, 0.05, 0.5][seed as usize % 4];
            let theta = perturb(snapshot.params(), scale, &mut rng);
            let ids: Vec<ObjectId> = (0..8)
                .map(|_| ObjectId(rng.gen_range(0..env.pool.len() as u32)))
                .collect();
            Ok(kl_regularizer(&theta, snapshot, &env.cache, &ids)?.0)
        })
        .collect::<Result<_>>()?;
    let min = perturbed.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        at_anchor == 0.0 && grads.is_zero() && min >= 0.0,
        format!(
            "value at snapshot {at_anchor:e}, gradient zero {}; min over {ANCHOR_PERTURBATIONS} perturbations {min:.3e}",
            grads.is_zero()
        ),
    )
}

fn beam_oracle() -> Result<Outcome> {
    let mut agree = 0;
    for seed in 0..BEAM_MODELS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = ModelDims {
            feature_dim: 4,
            embed_dim: 4,
            hidden_dim: 6,
            vocab_size: BEAM_VOCAB,
        };
        let model = random_model(dims, 2.0, &mut rng);
        let f = features(4, &mut rng);
        let content_tokens: Vec<usize> = (3..BEAM_VOCAB).collect();
        let mut sequences: Vec<Vec<usize>> = vec![vec![]];
        let mut frontier: Vec<Vec<usize>> = vec![vec![]];
        for _ in 1..BEAM_MAX_LEN {
            frontier = frontier
                .iter()
                .flat_map(|s| {
                    content_tokens.iter().map(move |&t| {
                        let mut n = s.clone();
                        n.push(t);
                        n
                    })
                })
                .collect();
            sequences.extend(frontier.iter().cloned());
        }
        let mut best: Option<(f64, Utterance)> = None;
        for content in &sequences {
            let mut tokens = content.clone();
            tokens.push(EOS);
            let u = Utterance::from_tokens(tokens)?;
            let score = model.utterance_logprob(&f, &u)? / u.len() as f64;
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, u));
            }
        }
        let (_, oracle) = best.context("no sequences")?;
        let beam = model.beam_decode(&f, sequences.len() + 1, BEAM_MAX_LEN)?;
        if beam.first().map(|h| &h.utterance) == Some(&oracle) {
            agree += 1;
        }
    }
    outcome(
        agree == BEAM_MODELS,
        format!("beam top-1 equals the exhaustive argmax on {agree} of {BEAM_MODELS} models (|V| {BEAM_VOCAB}, max length {BEAM_MAX_LEN})"),
    )
}

fn adaptation_sanity() -> Result<Outcome> {
    let env = env()?;
    let config = AdaptationConfig::default();
    let results: Vec<bool> = (0..SANITY_TRIALS)
        .into_par_iter()
        .map(|seed| -> Result<bool> {
            let ctx = env.context(ContextKind::Challenging, seed)?;
            let target = ctx.members[(seed % 4) as usize];
            let utterance =
                ScriptedPartner::new(seed).speak(target, &ctx, &env.pool, &env.vocab, 1)?;
            let mut params = env.snapshot().fork();
            let mut buffer = init_buffer(&params, &ctx, &env.pool, config.max_decode_len)?;
            let f = &env.pool.get(target)?.features;
            let before = params.utterance_logprob(f, &utterance)?;
            let set = augment(&utterance, AugmentMode::Grammar, &env.vocab);
            let obs = Observation {
                utterance: utterance.clone(),
                target,
                context_id: ctx.id.clone(),
                trial_index: 1,
            };
            let mut opt = OptimizerState::default();
            update_step(
                &mut params,
                &mut opt,
                &obs,
                &set,
                &ctx,
                &env.pool,
                &mut buffer,
                &config,
                &env.cache,
                seed,
            )?;
            Ok(params.utterance_logprob(f, &utterance)? > before)
        })
        .collect::<Result<_>>()?;
    let improved = results.iter().filter(|&&b| b).count();
    outcome(
        improved >= SANITY_MIN_IMPROVED,
        format!("log P(u|o) rose in {improved} of {SANITY_TRIALS} default updates (need >= {SANITY_MIN_IMPROVED})"),
    )
}

fn accuracy_gain(correct: &[(usize, bool)]) -> f64 {
    let at = |rep: usize| {
        let xs: Vec<f64> = correct
            .iter()
            .filter(|c| c.0 == rep)
            .map(|c| c.1 as u8 as f64)
            .collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    let last = correct.iter().map(|c| c.0).max().unwrap_or(1);
    at(last) - at(1)
}

fn listener_improvement() -> Result<Outcome> {
    let env = env()?;
    let games: Vec<(Transcript, ReplayOutcome)> = (0..LISTENER_GAMES)
        .into_par_iter()
        .map(|seed| {
            let g = run_selfplay(env, &SelfPlayConfig::default(), seed)?;
            let frozen = replay(env, &g.transcript, &ReplayVariant::frozen())?;
            Ok((g.transcript, frozen))
        })
        .collect::<Result<_>>()?;
    let adaptive: Vec<(usize, bool)> = games
        .iter()
        .flat_map(|(t, _)| t.records.iter().map(|r| (r.repetition_block, r.correct)))
        .collect();
    let frozen: Vec<(usize, bool)> = games
        .iter()
        .flat_map(|(_, f)| f.trials.iter().map(|r| (r.repetition_block, r.correct)))
        .collect();
    let gain = accuracy_gain(&adaptive);
    let drift = accuracy_gain(&frozen);
    outcome(
        gain >= LISTENER_MIN_GAIN && drift.abs() <= FROZEN_MAX_CHANGE,
        format!(
            "adaptive rep6 - rep1 {:+.1} points (need >= {:+.0}); frozen replay {:+.1} points (need within +/-{:.0}); {LISTENER_GAMES} games",
            100.0 * gain,
            100.0 * LISTENER_MIN_GAIN,
            100.0 * drift,
            100.0 * FROZEN_MAX_CHANGE
        ),
    )
}

struct ForgettingGame {
    drop_kl: f64,
    drop_free: f64,
    unseen_loss_kl: f64,
    unseen_loss_free: f64,
}

fn forgetting() -> Result<Outcome> {
    let env = env()?;
    let games: Vec<ForgettingGame> = (0..FORGETTING_GAMES)
        .into_par_iter()
        .map(|seed| -> Result<ForgettingGame> {
            let mut with_kl = SelfPlayConfig::default();
            with_kl.session.keep_snapshots = true;
            let mut without = with_kl.clone();
            without.session.adaptation.coefficients.kl_reg = 0.0;
            let a = run_selfplay(env, &with_kl, seed)?;
            let b = run_selfplay(env, &without, seed)?;
            let ctx = &a.transcript.header.context;
            let items = heldout_items(
                &env.pool,
                &env.vocab,
                ctx,
                FORGETTING_HELDOUT_CONTEXTS,
                seed,
            )?;
            let fa = forgetting_eval(&a.final_params, env.snapshot(), &items, ctx, &env.pool)?;
            let fb = forgetting_eval(&b.final_params, env.snapshot(), &items, ctx, &env.pool)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut unseen = Vec::new();
            while unseen.len() < FORGETTING_UNSEEN_SAMPLE {
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
            Ok(ForgettingGame {
                drop_kl: fa.drop,
                drop_free: fb.drop,
                unseen_loss_kl: loss(&ca.unseen),
                unseen_loss_free: loss(&cb.unseen),
            })
        })
        .collect::<Result<_>>()?;
    let n = games.len() as f64;
    let mean = |f: &dyn Fn(&ForgettingGame) -> f64| games.iter().map(f).sum::<f64>() / n;
    let drop_kl = mean(&|g| g.drop_kl);
    let drop_free = mean(&|g| g.drop_free);
    let curve_kl = mean(&|g| g.unseen_loss_kl);
    let curve_free = mean(&|g| g.unseen_loss_free);
    let diffs: Vec<f64> = games.iter().map(|g| g.drop_free - g.drop_kl).collect();
    let test = sign_test(&diffs, SIGN_TEST_RESAMPLES, 0)?;
    outcome(
        drop_kl < drop_free && test.p_value < SIGN_TEST_ALPHA && curve_kl < curve_free,
        format!(
            "held-out drop with KL {:.1} vs without {:.1} points; sign test {}+/{}-/{}= p {:.4} (need < {SIGN_TEST_ALPHA}); unseen log-likelihood loss {curve_kl:.3} vs {curve_free:.3}; {FORGETTING_GAMES} games",
            100.0 * drop_kl,
            100.0 * drop_free,
            test.positive,
            test.negative,
            test.ties,
            test.p_value
        ),
    )
}

fn ablations() -> Result<Outcome> {
    let env = env()?;
    let rows: Vec<[f64; 4]> = (0..ABLATION_GAMES)
        .into_par_iter()
        .map(|seed| -> Result<[f64; 4]> {
            let g = run_selfplay(env, &SelfPlayConfig::default(), seed)?;
            let t = &g.transcript;
            let members = &t.header.context.members;
            let mean = |o: &ReplayOutcome| {
                o.trials
                    .iter()
                    .map(|r| r.target_posterior(members))
                    .sum::<f64>()
                    / o.trials.len() as f64
            };
            let full = replay(env, t, &ReplayVariant::recorded(t))?;
            let mut v = ReplayVariant::recorded(t);
            v.adaptation.coefficients.rehearsal = 0.0;
            let no_rehearsal = replay(env, t, &v)?;
            let mut v = ReplayVariant::recorded(t);
            v.adaptation.coefficients.contrastive = 0.0;
            v.adaptation.rehearsal_contrastive = false;
            let no_pragmatics = replay(env, t, &v)?;
            let frozen = replay(env, t, &ReplayVariant::frozen())?;
            Ok([
                mean(&full),
                mean(&no_rehearsal),
                mean(&no_pragmatics),
                mean(&frozen),
            ])
        })
        .collect::<Result<_>>()?;
    let m: Vec<f64> = (0..4)
        .map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / rows.len() as f64)
        .collect();
    let (full, no_rehearsal, no_pragmatics, frozen) = (m[0], m[1], m[2], m[3]);
    outcome(
        full >= no_rehearsal && full >= no_pragmatics && no_rehearsal > frozen && no_pragmatics > frozen,
        format!(
            "mean target posterior: full {full:.4}, no-rehearsal {no_rehearsal:.4}, no-pragmatics {no_pragmatics:.4}, frozen {frozen:.4}; {ABLATION_GAMES} games"
        ),
    )
}

struct SpeakerRun {
    transcripts: Vec<Transcript>,
}

impl SpeakerRun {
    fn play(
        env: &GameEnv,
        kind: ContextKind,
        feedback: SpeakerFeedback,
        edit: impl Fn(&mut SelfPlayConfig) + Sync,
    ) -> Result<Self> {
        let transcripts = (0..SPEAKER_GAMES)
            .into_par_iter()
            .map(|seed| {
                let mut config = SelfPlayConfig {
                    role: RoleConfig::AgentSpeaker,
                    context_kind: kind,
                    feedback,
                    ..SelfPlayConfig::default()
                };
                edit(&mut config);
                Ok(run_selfplay(env, &config, seed)?.transcript)
            })
            .collect::<Result<_>>()?;
        Ok(Self { transcripts })
    }

    fn lengths(&self) -> Vec<f64> {
        length_by_repetition(&self.transcripts, &Bootstrap::default()).means()
    }

    /// Relative drop in mean length from the first to the last repetition.
    fn shortening(&self) -> f64 {
        let l = self.lengths();
        let first = l.first().copied().unwrap_or(0.0);
        (first - l.last().copied().unwrap_or(0.0)) / first
    }

    fn final_length(&self) -> f64 {
        self.lengths().last().copied().unwrap_or(0.0)
    }

    fn final_overlap(&self) -> Result<f64> {
        let s = overlap_by_repetition(&self.transcripts, &Bootstrap::default())?;
        s.points.last().map(|p| p.mean).context("no overlap points")
    }

    /// Final-repetition outputs the chunk grammar does not parse as one NP.
    fn final_non_np(&self, env: &GameEnv) -> (usize, usize) {
        let last: Vec<&str> = self
            .transcripts
            .iter()
            .flat_map(|t| {
                let rep = t
                    .records
                    .iter()
                    .map(|r| r.repetition_block)
                    .max()
                    .unwrap_or(0);
                t.records
                    .iter()
                    .filter(move |r| r.repetition_block == rep)
                    .map(|r| r.utterance_text.as_str())
            })
            .collect();
        let bad = last
            .iter()
            .filter(|text| {
                !refgame::adaptation::noun_phrases(text, &env.vocab)
                    .iter()
                    .any(|np| np == *text)
            })
            .count();
        (bad, last.len())
    }
}

fn speaker_efficiency() -> Result<Outcome> {
    let env = env()?;
    let augmented = SpeakerRun::play(env, ContextKind::Simple, SpeakerFeedback::Scripted, |_| {})?;
    let plain = SpeakerRun::play(env, ContextKind::Simple, SpeakerFeedback::Scripted, |c| {
        c.session.adaptation.speaker_augmentation = false
    })?;
    let penalized = SpeakerRun::play(env, ContextKind::Simple, SpeakerFeedback::Scripted, |c| {
        c.session.adaptation.speaker_augmentation = false;
        c.session.speaker.length_penalty = LENGTH_PENALTY;
    })?;
    let pragmatic = SpeakerRun::play(
        env,
        ContextKind::Challenging,
        SpeakerFeedback::AlwaysCorrect,
        |_| {},
    )?;
    let literal = SpeakerRun::play(
        env,
        ContextKind::Challenging,
        SpeakerFeedback::AlwaysCorrect,
        |c| c.session.adaptation.coefficients.contrastive = 0.0,
    )?;

    let aug_short = augmented.shortening();
    let plain_short = plain.shortening();
    let pen_short = 1.0 - penalized.final_length() / plain.final_length();
    let overlap_prag = pragmatic.final_overlap()?;
    let overlap_lit = literal.final_overlap()?;
    let (pen_bad, pen_total) = penalized.final_non_np(env);
    let (aug_bad, aug_total) = augmented.final_non_np(env);

    let checks = [
        aug_short >= AUGMENTED_MIN_SHORTENING,
        plain_short < UNAUGMENTED_MAX_SHORTENING,
        overlap_prag < overlap_lit,
        pen_short > 0.0,
        pen_bad > 0,
        aug_bad == 0,
    ];
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "length drop: augmented {:.0}% (need >= {:.0}%) [{}], no augmentation {:.0}% (need < {:.0}%) [{}]; final overlap lc=0.1 {overlap_prag:.3} vs lc=0 {overlap_lit:.3} (need strictly below) [{}]; length penalty {LENGTH_PENALTY} final length {:.0}% below no penalty [{}] with {pen_bad}/{pen_total} non-NP outputs (need > 0) [{}]; augmented non-NP {aug_bad}/{aug_total} [{}]",
            100.0 * aug_short,
            100.0 * AUGMENTED_MIN_SHORTENING,
            mark(checks[0]),
            100.0 * plain_short,
            100.0 * UNAUGMENTED_MAX_SHORTENING,
            mark(checks[1]),
            mark(checks[2]),
            100.0 * pen_short,
            mark(checks[3]),
            mark(checks[4]),
            mark(checks[5]),
        ),
    )
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "miss"
    }
}

fn determinism() -> Result<Outcome> {
    let env = env()?;
    let mut identical = 0;
    let mut exact = 0;
    for seed in 0..DETERMINISM_GAMES {
        for role in [RoleConfig::AgentListener, RoleConfig::AgentSpeaker] {
            let config = SelfPlayConfig {
                role,
                ..SelfPlayConfig::default()
            };
            let a = run_selfplay(env, &config, seed)?.transcript;
            let b = run_selfplay(env, &config, seed)?.transcript;
            identical += usize::from(a.to_jsonl() == b.to_jsonl());
        }
        let t = run_selfplay(env, &SelfPlayConfig::default(), seed)?.transcript;
        let r = replay(env, &t, &ReplayVariant::recorded(&t))?;
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        let same = t.records.len() == r.trials.len()
            && t.records
                .iter()
                .zip(&r.trials)
                .all(|(rec, tr)| bits(&rec.listener_posterior) == bits(&tr.posterior));
        exact += usize::from(same);
    }
    let runs = 2 * DETERMINISM_GAMES as usize;
    outcome(
        identical == runs && exact == DETERMINISM_GAMES as usize,
        format!(
            "byte-identical reruns {identical}/{runs}; bit-exact replays {exact}/{DETERMINISM_GAMES}"
        ),
    )
}
