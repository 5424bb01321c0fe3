//! The agent as listener on a hard context: the scripted partner shortens
//! its descriptions while the agent adapts after every trial.
//!
//! cargo run --example listener_game -p refgame

use anyhow::Result;
use refgame::game::{run_selfplay, SelfPlayConfig, SessionConfig};
use refgame::setup::SetupConfig;

fn main() -> Result<()> {
    let setup = SetupConfig::default();
    let env = setup.pretrain()?.env(&setup)?;
    let adaptive = SelfPlayConfig::default();
    let frozen = SelfPlayConfig {
        session: SessionConfig {
            adapt: false,
            ..SessionConfig::default()
        },
        ..SelfPlayConfig::default()
    };
    let seed = 3;
    let a = run_selfplay(&env, &adaptive, seed)?.transcript;
    let f = run_selfplay(&env, &frozen, seed)?.transcript;

    println!("context:");
    for &id in &a.header.context.members {
        println!(
            "  {id:>5}  {}",
            env.pool.get(id)?.describe(&env.pool.schema)
        );
    }
    println!(
        "\n{:>5} {:>4} {:<28} {:>8} {:>8}",
        "trial", "rep", "partner says", "adapted", "frozen"
    );
    for (x, y) in a.records.iter().zip(&f.records) {
        let mark = |ok: bool| if ok { "right" } else { "wrong" };
        println!(
            "{:>5} {:>4} {:<28} {:>8} {:>8}",
            x.trial_index,
            x.repetition_block,
            x.utterance_text,
            mark(x.correct),
            mark(y.correct)
        );
    }
    let acc = |t: &refgame::game::Transcript| {
        t.records.iter().filter(|r| r.correct).count() as f64 / t.records.len() as f64
    };
    println!("\naccuracy adapted {:.2}, frozen {:.2}", acc(&a), acc(&f));
    Ok(())
}
