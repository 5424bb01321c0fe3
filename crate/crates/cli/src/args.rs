use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "refgame",
    version,
    about = "Repeated reference games with a continually adapting agent"
)]
pub struct Cli {
    /// Log level for progress messages on stderr.
    #[arg(long, global = true, default_value = "info")]
    pub log: tracing::Level,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the captioner to the synthetic corpus and save it.
    Pretrain(Common),
    /// Compare analytic gradients with central differences.
    Gradcheck(GradcheckArgs),
    /// Play seeded games against the scripted partner.
    Selfplay(BatchArgs),
    /// Re-run one agent variant against recorded games.
    Replay(ReplayArgs),
    /// Replay recorded games under several variants; one row per variant.
    Ablate(AblateArgs),
    /// Held-out accuracy drop with and without the regularizer, per game.
    EvalForgetting(BatchArgs),
    /// Summaries of recorded games by repetition.
    Metrics(MetricsArgs),
    /// Run the live game server.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration; absent values take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory. A non-empty one gets a numeric suffix.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// First game seed; for `pretrain`, the initialization seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Pretrained model directory; absent pretrains from the configuration.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Listener,
    Speaker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ContextArg {
    Challenging,
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeedbackArg {
    Scripted,
    AlwaysCorrect,
}

/// Overrides of the configured game variant.
#[derive(Debug, Args)]
pub struct VariantArgs {
    /// Which side the agent plays.
    #[arg(long)]
    pub role: Option<RoleArg>,
    /// How the game's context is drawn.
    #[arg(long)]
    pub context: Option<ContextArg>,
    /// How the simulated listener answers an agent speaker.
    #[arg(long)]
    pub feedback: Option<FeedbackArg>,
    /// Weight of the utterance likelihood term.
    #[arg(long)]
    pub lambda_utterance: Option<f64>,
    /// Weight of the contrastive term.
    #[arg(long)]
    pub lambda_contrastive: Option<f64>,
    /// Weight of the regularizer toward the pretrained model.
    #[arg(long)]
    pub lambda_kl: Option<f64>,
    /// Weight of rehearsal on earlier trials.
    #[arg(long)]
    pub lambda_rehearsal: Option<f64>,
    /// Length penalty of the speaker's re-ranker.
    #[arg(long)]
    pub length_penalty: Option<f64>,
    /// Play without updating the agent.
    #[arg(long)]
    pub frozen: bool,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub variant: VariantArgs,
    /// Number of games; game seeds run upward from `--seed`.
    #[arg(long)]
    pub games: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: Common,
    /// Random parameter draws.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Largest accepted relative error.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Word-embedding width of the checked model.
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Hidden width of the checked model.
    #[arg(long)]
    pub hidden_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Full,
    NoPragmatics,
    NoRehearsal,
    Frozen,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Directory of transcripts (`*.jsonl`) or a single transcript.
    #[arg(long)]
    pub transcripts: PathBuf,
    /// Agent variant run against the recorded partner moves.
    #[arg(long, value_enum, default_value = "full")]
    pub variant: VariantArg,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Recorded games to replay; absent plays fresh ones.
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    /// Fresh games to play when no transcripts are given.
    #[arg(long)]
    pub games: Option<usize>,
    /// Include the full agent. With no variant flags, full, no-pragmatics and no-rehearsal run.
    #[arg(long)]
    pub full: bool,
    /// Include the agent without the contrastive terms.
    #[arg(long)]
    pub no_pragmatics: bool,
    /// Include the agent without rehearsal.
    #[arg(long)]
    pub no_rehearsal: bool,
    /// Include the agent that never updates.
    #[arg(long)]
    pub frozen: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directory of transcripts (`*.jsonl`) or a single transcript.
    #[arg(long)]
    pub transcripts: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Address to bind.
    #[arg(long, env = "REFGAME_HOST", default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Port to bind.
    #[arg(long, env = "REFGAME_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Pretrained model directory; absent pretrains the default model on start.
    #[arg(long, env = "REFGAME_CHECKPOINT")]
    pub checkpoint: Option<PathBuf>,
    /// TOML server settings.
    #[arg(long, env = "REFGAME_CONFIG")]
    pub config: Option<PathBuf>,
    /// Root for session transcripts, checkpoints and run records.
    #[arg(long, env = "REFGAME_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
    /// Seed for pretraining and for sessions that join without one.
    #[arg(long, env = "REFGAME_SEED", default_value_t = 0)]
    pub seed: u64,
}
