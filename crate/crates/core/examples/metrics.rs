//! Summaries by repetition with bootstrap intervals, written to disk, plus
//! likelihood curves of one game.
//!
//! cargo run --example metrics -p refgame

use anyhow::Result;
use refgame::game::{run_selfplay, SelfPlayConfig, Transcript};
use refgame::metrics::{likelihood_curves, Bootstrap, MetricsReport};
use refgame::setup::SetupConfig;
use refgame::world::ObjectId;

fn main() -> Result<()> {
    let setup = SetupConfig::default();
    let env = setup.pretrain()?.env(&setup)?;
    let games: Vec<Transcript> = (0..10)
        .map(|s| Ok(run_selfplay(&env, &SelfPlayConfig::default(), s)?.transcript))
        .collect::<Result<_>>()?;
    let report = MetricsReport::compute(&games, &Bootstrap::default())?;
    print!("{}", report.to_tsv());
    let dir = tempfile::tempdir()?;
    report.write(dir.path())?;
    println!(
        "wrote metrics.json and metrics.tsv to {}",
        dir.path().display()
    );

    let mut config = SelfPlayConfig::default();
    config.session.keep_snapshots = true;
    let g = run_selfplay(&env, &config, 0)?;
    let members = &g.transcript.header.context.members;
    let unseen: Vec<ObjectId> = env
        .pool
        .ids()
        .filter(|id| !members.contains(id))
        .take(20)
        .collect();
    let c = likelihood_curves(
        &g.transcript,
        &g.snapshots,
        &g.final_params,
        &env.cache,
        &env.pool,
        &unseen,
    )?;
    println!("\nmean log-likelihood before each trial (and after the last):");
    println!(
        "{:>5} {:>14} {:>10} {:>14}",
        "trial", "initial", "unseen", "final"
    );
    for t in 0..c.len() {
        println!(
            "{t:>5} {:>14.3} {:>10.3} {:>14.3}",
            c.initial_targets[t], c.unseen[t], c.final_targets[t]
        );
    }
    Ok(())
}
