use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use rayon::prelude::*;
use refgame::experiments::{ablate, ablation_tsv, forgetting_table, AblationRow, AblationVariant};
use refgame::game::{
    replay, run_selfplay, GameEnv, RoleConfig, SelfPlayConfig, SpeakerFeedback, Transcript,
};
use refgame::gradcheck::gradcheck;
use refgame::metrics::MetricsReport;
use refgame::world::ContextKind;
use refgame_service::ServiceConfig;
use serde::Serialize;

use crate::args::*;
use crate::config::{fresh_dir, model, Resolved, RunConfig, RunInfo};

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Pretrain(a) => pretrain(a),
        Command::Gradcheck(a) => gradcheck_cmd(a),
        Command::Selfplay(a) => selfplay(a),
        Command::Replay(a) => replay_cmd(a),
        Command::Ablate(a) => ablate_cmd(a),
        Command::EvalForgetting(a) => eval_forgetting(a),
        Command::Metrics(a) => metrics(a),
        Command::Serve(a) => serve(a),
    }
}

/// Configuration and a fresh output directory for one run.
struct Run {
    config: RunConfig,
    info: RunInfo,
}

impl Run {
    fn start(subcommand: &str, common: &Common) -> Result<Self> {
        let config = RunConfig::load(common.config.as_deref())?;
        let requested = common
            .out
            .clone()
            .unwrap_or_else(|| Path::new("runs").join(subcommand));
        let output = fresh_dir(&requested)?;
        tracing::info!(out = %output.display(), "writing artifacts");
        Ok(Self {
            config,
            info: RunInfo {
                subcommand: subcommand.into(),
                seed: common.seed.unwrap_or(0),
                output,
                config_file: common.config.clone(),
                ..RunInfo::default()
            },
        })
    }

    fn out(&self) -> &Path {
        &self.info.output
    }

    fn path(&self, name: &str) -> PathBuf {
        self.info.output.join(name)
    }

    fn env(&mut self, checkpoint: Option<&Path>) -> Result<GameEnv> {
        self.info.checkpoint = checkpoint.map(Path::to_path_buf);
        let pretrained = model(&self.config.setup, checkpoint)?;
        Ok(pretrained.env(&self.config.setup)?)
    }

    fn games(&mut self, flag: Option<usize>) -> Vec<u64> {
        let n = flag.unwrap_or(self.config.games);
        self.config.games = n;
        self.info.games = Some(n);
        (self.info.seed..self.info.seed + n as u64).collect()
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write(name, &serde_json::to_string_pretty(value)?)
    }

    fn finish(&self) -> Result<ExitCode> {
        Resolved {
            run: &self.info,
            config: &self.config,
        }
        .write(self.out())?;
        println!("wrote {}", self.out().display());
        Ok(ExitCode::SUCCESS)
    }
}

fn apply_variant(v: &VariantArgs, sp: &mut SelfPlayConfig) {
    if let Some(r) = v.role {
        sp.role = match r {
            RoleArg::Listener => RoleConfig::AgentListener,
            RoleArg::Speaker => RoleConfig::AgentSpeaker,
        };
    }
    if let Some(c) = v.context {
        sp.context_kind = match c {
            ContextArg::Challenging => ContextKind::Challenging,
            ContextArg::Simple => ContextKind::Simple,
        };
    }
    if let Some(f) = v.feedback {
        sp.feedback = match f {
            FeedbackArg::Scripted => SpeakerFeedback::Scripted,
            FeedbackArg::AlwaysCorrect => SpeakerFeedback::AlwaysCorrect,
        };
    }
    let c = &mut sp.session.adaptation.coefficients;
    for (flag, slot) in [
        (v.lambda_utterance, &mut c.utterance),
        (v.lambda_contrastive, &mut c.contrastive),
        (v.lambda_kl, &mut c.kl_reg),
        (v.lambda_rehearsal, &mut c.rehearsal),
    ] {
        if let Some(x) = flag {
            *slot = x;
        }
    }
    if let Some(b) = v.length_penalty {
        sp.session.speaker.length_penalty = b;
    }
    if v.frozen {
        sp.session.adapt = false;
    }
}

/// Every `*.jsonl` in a directory by file name, or one file.
fn read_transcripts(path: &Path) -> Result<Vec<Transcript>> {
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .with_context(|| format!("listing {}", path.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| p.extension().is_some_and(|e| e == "jsonl"));
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        bail!("no transcripts in {}", path.display());
    }
    files
        .iter()
        .map(|f| Transcript::read(f).with_context(|| format!("reading {}", f.display())))
        .collect()
}

fn play(env: &GameEnv, sp: &SelfPlayConfig, seeds: &[u64]) -> Result<Vec<Transcript>> {
    seeds
        .par_iter()
        .map(|&s| Ok(run_selfplay(env, sp, s)?.transcript))
        .collect()
}

fn write_transcripts(run: &Run, transcripts: &[Transcript]) -> Result<()> {
    let dir = run.path("transcripts");
    std::fs::create_dir_all(&dir)?;
    for t in transcripts {
        t.write(&dir.join(format!("{}.jsonl", t.header.game_id)))?;
    }
    Ok(())
}

fn pretrain(a: Common) -> Result<ExitCode> {
    let run = Run::start("pretrain", &a)?;
    let mut setup = run.config.setup.clone();
    if let Some(s) = a.seed {
        setup.pretrain_seed = s;
    }
    let p = setup.pretrain()?;
    p.save(&run.path("model"))?;
    run.write_json("report.json", &p.report)?;
    #[derive(Serialize)]
    #[serde(rename_all = "camelCase")]
    struct Snapshot<'a> {
        hash: &'a str,
        parameters: usize,
        vocabulary: Vec<&'a str>,
    }
    run.write_json(
        "snapshot.json",
        &Snapshot {
            hash: p.snapshot.hash(),
            parameters: p.params.parameter_count(),
            vocabulary: (0..p.vocab.len()).map(|t| p.vocab.word(t)).collect(),
        },
    )?;
    if let Some(r) = &p.report {
        println!(
            "best epoch {} validation loss {:.4}",
            r.best_epoch,
            r.validation_loss
                .get(r.best_epoch)
                .copied()
                .unwrap_or(f64::NAN)
        );
    }
    let mut run = run;
    run.config.setup = setup;
    run.finish()
}

fn gradcheck_cmd(a: GradcheckArgs) -> Result<ExitCode> {
    let mut run = Run::start("gradcheck", &a.common)?;
    let gc = &mut run.config.gradcheck;
    if let Some(s) = a.seeds {
        gc.seeds = s;
    }
    if let Some(t) = a.tolerance {
        gc.tolerance = t;
    }
    if let Some(d) = a.embed_dim {
        gc.embed_dim = d;
    }
    if let Some(d) = a.hidden_dim {
        gc.hidden_dim = d;
    }
    let report = gradcheck(gc)?;
    run.write("gradcheck.tsv", &report.to_tsv())?;
    run.write_json("gradcheck.json", &report)?;
    run.finish()?;
    let verdict = if report.passed() { "passed" } else { "FAILED" };
    println!(
        "gradcheck {verdict}: max relative error {:.3e} (tolerance {:.0e}) over {} seeds",
        report.max_rel_err, report.tolerance, report.seeds
    );
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn selfplay(a: BatchArgs) -> Result<ExitCode> {
    let mut run = Run::start("selfplay", &a.common)?;
    apply_variant(&a.variant, &mut run.config.selfplay);
    let seeds = run.games(a.games);
    let env = run.env(a.model.checkpoint.as_deref())?;
    let transcripts = play(&env, &run.config.selfplay, &seeds)?;
    write_transcripts(&run, &transcripts)?;
    let report = MetricsReport::compute(&transcripts, &run.config.bootstrap)?;
    report.write(run.out())?;
    print!("{}", report.to_tsv());
    run.finish()
}

fn replay_cmd(a: ReplayArgs) -> Result<ExitCode> {
    let mut run = Run::start("replay", &a.common)?;
    let variant = variant_of(a.variant);
    run.info.transcripts = Some(a.transcripts.clone());
    run.info.variants = vec![variant.name().into()];
    let transcripts = read_transcripts(&a.transcripts)?;
    let env = run.env(a.model.checkpoint.as_deref())?;
    let mut tsv = String::from(
        "gameId\ttrialIndex\trepetition\ttargetId\tchoiceId\tcorrect\ttargetPosterior\n",
    );
    let outcomes = transcripts
        .par_iter()
        .map(|t| Ok(replay(&env, t, &variant.replay_variant(t))?))
        .collect::<Result<Vec<_>>>()?;
    for (t, out) in transcripts.iter().zip(&outcomes) {
        for r in &out.trials {
            tsv.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                t.header.game_id,
                r.trial_index,
                r.repetition_block,
                r.target_id.0,
                r.choice_id.0,
                r.correct,
                r.target_posterior(&t.header.context.members)
            ));
        }
    }
    run.write("replay.tsv", &tsv)?;
    let rows = ablate(&env, &transcripts, &[variant])?;
    run.write("summary.tsv", &ablation_tsv(&rows))?;
    print!("{}", ablation_tsv(&rows));
    run.finish()
}

fn variant_of(v: VariantArg) -> AblationVariant {
    match v {
        VariantArg::Full => AblationVariant::Full,
        VariantArg::NoPragmatics => AblationVariant::NoPragmatics,
        VariantArg::NoRehearsal => AblationVariant::NoRehearsal,
        VariantArg::Frozen => AblationVariant::Frozen,
    }
}

fn ablate_cmd(a: AblateArgs) -> Result<ExitCode> {
    let mut run = Run::start("ablate", &a.common)?;
    let picked: Vec<AblationVariant> = [
        (a.full, AblationVariant::Full),
        (a.no_pragmatics, AblationVariant::NoPragmatics),
        (a.no_rehearsal, AblationVariant::NoRehearsal),
        (a.frozen, AblationVariant::Frozen),
    ]
    .into_iter()
    .filter_map(|(on, v)| on.then_some(v))
    .collect();
    let variants = if picked.is_empty() {
        vec![
            AblationVariant::Full,
            AblationVariant::NoPragmatics,
            AblationVariant::NoRehearsal,
        ]
    } else {
        picked
    };
    run.info.variants = variants.iter().map(|v| v.name().to_string()).collect();
    let env = run.env(a.model.checkpoint.as_deref())?;
    let transcripts = match &a.transcripts {
        Some(dir) => {
            run.info.transcripts = Some(dir.clone());
            read_transcripts(dir)?
        }
        None => {
            let seeds = run.games(a.games);
            let t = play(&env, &run.config.selfplay, &seeds)?;
            write_transcripts(&run, &t)?;
            t
        }
    };
    let rows: Vec<AblationRow> = ablate(&env, &transcripts, &variants)?;
    run.write("ablation.tsv", &ablation_tsv(&rows))?;
    run.write_json("ablation.json", &rows)?;
    print!("{}", ablation_tsv(&rows));
    run.finish()
}

fn eval_forgetting(a: BatchArgs) -> Result<ExitCode> {
    let mut run = Run::start("eval-forgetting", &a.common)?;
    apply_variant(&a.variant, &mut run.config.selfplay);
    let seeds = run.games(a.games);
    let env = run.env(a.model.checkpoint.as_deref())?;
    let table = forgetting_table(&env, &run.config.selfplay, &run.config.forgetting, &seeds)?;
    run.write("forgetting.tsv", &table.to_tsv())?;
    run.write_json("forgetting.json", &table)?;
    let s = &table.sign_test;
    println!(
        "held-out accuracy drop: {:.4} with regularizer, {:.4} without; sign test {}+ {}- {}= p {:.4}",
        table.mean(|r| r.drop_with_kl),
        table.mean(|r| r.drop_without_kl),
        s.positive,
        s.negative,
        s.ties,
        s.p_value
    );
    run.finish()
}

fn metrics(a: MetricsArgs) -> Result<ExitCode> {
    let mut run = Run::start("metrics", &a.common)?;
    run.info.transcripts = Some(a.transcripts.clone());
    let transcripts = read_transcripts(&a.transcripts)?;
    let report = MetricsReport::compute(&transcripts, &run.config.bootstrap)?;
    report.write(run.out())?;
    print!("{}", report.to_tsv());
    run.finish()
}

fn serve(a: ServeArgs) -> Result<ExitCode> {
    let config = ServiceConfig {
        host: a.host,
        port: a.port,
        checkpoint: a.checkpoint,
        config: a.config,
        data_dir: a.data_dir,
        seed: a.seed,
    };
    #[derive(Serialize)]
    struct Flags<'a> {
        host: String,
        port: u16,
        checkpoint: Option<&'a Path>,
        config: Option<&'a Path>,
        data_dir: &'a Path,
        seed: u64,
    }
    #[derive(Serialize)]
    struct ResolvedServe<'a> {
        flags: Flags<'a>,
        settings: refgame_service::ServerSettings,
    }
    let resolved = ResolvedServe {
        flags: Flags {
            host: config.host.to_string(),
            port: config.port,
            checkpoint: config.checkpoint.as_deref(),
            config: config.config.as_deref(),
            data_dir: &config.data_dir,
            seed: config.seed,
        },
        settings: config.settings()?,
    };
    let dir = fresh_dir(&config.data_dir.join("runs").join("serve"))?;
    std::fs::write(
        dir.join("resolved-config.toml"),
        toml::to_string(&resolved)?,
    )?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(refgame_service::serve(config))?;
    Ok(ExitCode::SUCCESS)
}
