//! The agent as speaker: with sub-phrase augmentation its descriptions get
//! shorter over repetitions; a length penalty shortens them from the start.
//!
//! cargo run --example speaker_game -p refgame

use anyhow::Result;
use refgame::game::{run_selfplay, RoleConfig, SelfPlayConfig, Transcript};
use refgame::metrics::{length_by_repetition, Bootstrap};
use refgame::setup::SetupConfig;
use refgame::world::ContextKind;

fn main() -> Result<()> {
    let setup = SetupConfig::default();
    let env = setup.pretrain()?.env(&setup)?;
    let base = SelfPlayConfig {
        role: RoleConfig::AgentSpeaker,
        context_kind: ContextKind::Simple,
        ..SelfPlayConfig::default()
    };
    let mut plain = base.clone();
    plain.session.adaptation.speaker_augmentation = false;
    let mut penalized = plain.clone();
    penalized.session.speaker.length_penalty = 0.5;

    let game = run_selfplay(&env, &base, 1)?.transcript;
    let target = game.records[0].target_id;
    println!(
        "descriptions of {}:",
        env.pool.get(target)?.describe(&env.pool.schema)
    );
    for r in game.records.iter().filter(|r| r.target_id == target) {
        println!(
            "  rep {}  {:<28} {}",
            r.repetition_block,
            r.utterance_text,
            if r.correct { "understood" } else { "missed" }
        );
    }

    let games = |c: &SelfPlayConfig| -> Result<Vec<Transcript>> {
        (0..8)
            .map(|s| Ok(run_selfplay(&env, c, s)?.transcript))
            .collect()
    };
    println!("\nmean words by repetition over 8 games:");
    for (name, config) in [
        ("augmented", &base),
        ("no augmentation", &plain),
        ("length penalty", &penalized),
    ] {
        let lengths = length_by_repetition(&games(config)?, &Bootstrap::default()).means();
        let cells: Vec<String> = lengths.iter().map(|l| format!("{l:.2}")).collect();
        println!("  {name:<16} {}", cells.join("  "));
    }
    Ok(())
}
