//! Drives a session move by move as a human partner would, saves its
//! transcript part way, and resumes it from the file.
//!
//! cargo run --example live_session -p refgame

use anyhow::Result;
use refgame::captioner::Utterance;
use refgame::game::{
    GameSession, ListenerMove, RoleConfig, SessionConfig, SpeakerMove, Transcript,
};
use refgame::setup::SetupConfig;
use refgame::world::ContextKind;

fn main() -> Result<()> {
    let setup = SetupConfig::default();
    let env = setup.pretrain()?.env(&setup)?;
    let context = env.context(ContextKind::Challenging, 5)?;
    let mut session = GameSession::new(
        &env,
        "demo",
        RoleConfig::AgentListener,
        context,
        SessionConfig::default(),
        5,
    )?;

    for _ in 0..6 {
        let target = session.current_target().expect("game in progress");
        let spec = env.pool.get(target)?;
        let text = format!("the {} one", spec.describe(&env.pool.schema));
        let (utterance, unknown) = Utterance::parse(&text, &env.vocab)?;
        let r = session.run_trial(&env, SpeakerMove::Partner(utterance), ListenerMove::Agent)?;
        println!(
            "trial {} said {:?} (unknown {:?}) agent chose {} ({})",
            r.trial_index,
            text,
            unknown,
            r.choice_id,
            if r.correct { "right" } else { "wrong" }
        );
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("demo.jsonl");
    session.transcript().write(&path)?;
    let resumed = GameSession::restore(&env, &Transcript::read(&path)?, false, false)?;
    assert_eq!(
        resumed.agent().params().hash(),
        session.agent().params().hash()
    );
    println!(
        "resumed at trial {} of {} with identical parameters",
        resumed.trial_index(),
        resumed.schedule().len()
    );
    Ok(())
}
