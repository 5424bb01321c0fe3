//! Plays each game with and without the regularizer and scores both agents
//! on held-out contexts they never adapted to.
//!
//! cargo run --example forgetting -p refgame

use anyhow::Result;
use refgame::experiments::{forgetting_table, ForgettingConfig};
use refgame::game::SelfPlayConfig;
use refgame::setup::SetupConfig;

fn main() -> Result<()> {
    let setup = SetupConfig::default();
    let env = setup.pretrain()?.env(&setup)?;
    let seeds: Vec<u64> = (0..6).collect();
    let table = forgetting_table(
        &env,
        &SelfPlayConfig::default(),
        &ForgettingConfig::default(),
        &seeds,
    )?;
    print!("{}", table.to_tsv());
    let t = &table.sign_test;
    println!(
        "\nmean drop {:.3} with the regularizer, {:.3} without; {} games favour it, {} do not, {} tie (p {:.3})",
        table.mean(|r| r.drop_with_kl),
        table.mean(|r| r.drop_without_kl),
        t.positive,
        t.negative,
        t.ties,
        t.p_value
    );
    Ok(())
}
