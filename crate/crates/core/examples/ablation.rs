//! Records listener games once, then replays them under agent variants that
//! drop parts of the objective.
//!
//! cargo run --example ablation -p refgame

use anyhow::Result;
use refgame::experiments::{ablate, ablation_tsv, AblationVariant};
use refgame::game::{run_selfplay, SelfPlayConfig, Transcript};
use refgame::setup::SetupConfig;

fn main() -> Result<()> {
    let setup = SetupConfig::default();
    let env = setup.pretrain()?.env(&setup)?;
    let games: Vec<Transcript> = (0..6)
        .map(|s| Ok(run_selfplay(&env, &SelfPlayConfig::default(), s)?.transcript))
        .collect::<Result<_>>()?;
    let rows = ablate(&env, &games, &AblationVariant::ALL)?;
    print!("{}", ablation_tsv(&rows));
    Ok(())
}
