use super::*;
use crate::adaptation::AdaptationConfig;
use crate::agents::{ScriptedPartner, SpeakerConfig};
use crate::captioner::Utterance;
use crate::error::Error;
use crate::testutil::fixture;
use crate::world::{build_simple_context, Context, ContextKind, ObjectId};

fn env(seed: u64) -> GameEnv {
    let fx = fixture(seed);
    GameEnv::new(fx.pool, &fx.snapshot, 6, seed).unwrap()
}

fn session_config() -> SessionConfig {
    SessionConfig {
        adaptation: AdaptationConfig {
            max_decode_len: 6,
            ..AdaptationConfig::default()
        },
        speaker: SpeakerConfig {
            max_len: 6,
            beam_width: 10,
            top_k: 10,
            ..SpeakerConfig::default()
        },
        ..SessionConfig::default()
    }
}

fn selfplay(role: RoleConfig) -> SelfPlayConfig {
    SelfPlayConfig {
        role,
        context_kind: ContextKind::Challenging,
        session: session_config(),
        ..SelfPlayConfig::default()
    }
}

/// Schedules accept any member list; only games require full contexts.
fn context(env: &GameEnv, n: usize) -> Context {
    Context {
        id: "few".into(),
        members: env.pool.ids().take(n).collect(),
        kind: ContextKind::Simple,
    }
}

#[test]
fn schedules_visit_each_target_once_per_block_without_repeats() {
    let env = env(0);
    let ctx = build_simple_context(&env.pool, 0).unwrap();
    for seed in 0..10_000 {
        let s = make_schedule(&ctx, DEFAULT_BLOCKS, seed).unwrap();
        assert_eq!(s.len(), 24);
        s.validate().unwrap();
    }
    assert_eq!(
        make_schedule(&ctx, 6, 3).unwrap(),
        make_schedule(&ctx, 6, 3).unwrap()
    );
    let s = make_schedule(&ctx, 6, 3).unwrap();
    assert_eq!(
        (
            s.repetition(0),
            s.repetition(3),
            s.repetition(4),
            s.repetition(23)
        ),
        (1, 1, 2, 6)
    );
}

#[test]
fn degenerate_schedules() {
    let env = env(0);
    let one = context(&env, 1);
    assert_eq!(make_schedule(&one, 1, 0).unwrap().targets, one.members);
    assert!(matches!(make_schedule(&one, 2, 0), Err(Error::Input(_))));
    let ctx = build_simple_context(&env.pool, 0).unwrap();
    assert!(make_schedule(&ctx, 0, 0).is_err());
    let mut bad = make_schedule(&ctx, 2, 0).unwrap();
    bad.targets.swap(3, 4);
    bad.targets[4] = bad.targets[3];
    assert!(bad.validate().is_err());
}

#[test]
fn trial_seeds_are_distinct_across_trials_and_games() {
    let mut seen = std::collections::HashSet::new();
    for g in 0..50 {
        for t in 0..24 {
            assert!(seen.insert(trial_seed(g, t)));
        }
    }
}

#[test]
fn selfplay_emits_one_valid_record_per_scheduled_trial() {
    let env = env(1);
    let out = run_selfplay(&env, &selfplay(RoleConfig::AgentListener), 5).unwrap();
    let tr = &out.transcript;
    assert_eq!(tr.records.len(), 24);
    for (t, r) in tr.records.iter().enumerate() {
        r.validate().unwrap();
        assert_eq!(r.trial_index, t);
        assert_eq!(r.target_id, tr.header.schedule.targets[t]);
        assert_eq!(r.correct, r.choice_id == r.target_id);
        assert!(r.update_applied);
        assert!(r.wall_times.is_none());
        let mut perm = r.display_permutation.clone();
        perm.sort();
        assert_eq!(perm, [0, 1, 2, 3]);
    }
    let json: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&tr.records[0]).unwrap()).unwrap();
    for field in [
        "gameId",
        "trialIndex",
        "repetitionBlock",
        "contextObjectIds",
        "targetId",
        "roleConfig",
        "utteranceTokens",
        "utteranceText",
        "listenerPosterior",
        "choiceId",
        "correct",
        "updateApplied",
        "displayPermutation",
        "wallTimes",
        "seed",
    ] {
        assert!(json.get(field).is_some(), "missing {field}");
    }
}

#[test]
fn identical_seeds_give_byte_identical_transcripts() {
    let env = env(2);
    for role in [RoleConfig::AgentListener, RoleConfig::AgentSpeaker] {
        let a = run_selfplay(&env, &selfplay(role), 9)
            .unwrap()
            .transcript
            .to_jsonl();
        let b = run_selfplay(&env, &selfplay(role), 9)
            .unwrap()
            .transcript
            .to_jsonl();
        assert_eq!(a, b);
        let c = run_selfplay(&env, &selfplay(role), 10)
            .unwrap()
            .transcript
            .to_jsonl();
        assert_ne!(a, c);
    }
}

#[test]
fn transcripts_round_trip_through_text_and_files() {
    let env = env(3);
    let tr = run_selfplay(&env, &selfplay(RoleConfig::AgentListener), 1)
        .unwrap()
        .transcript;
    let text = tr.to_jsonl();
    assert_eq!(Transcript::parse(&text).unwrap(), tr);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.jsonl");
    tr.write(&path).unwrap();
    assert_eq!(Transcript::read(&path).unwrap(), tr);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn malformed_transcripts_are_format_errors() {
    let env = env(3);
    let tr = run_selfplay(&env, &selfplay(RoleConfig::AgentListener), 1)
        .unwrap()
        .transcript;
    assert!(matches!(Transcript::parse(""), Err(Error::Format(_))));
    let mut header = tr.header.clone();
    header.version = 99;
    let bad = Transcript {
        header,
        records: vec![],
    };
    assert!(matches!(
        Transcript::parse(&bad.to_jsonl()),
        Err(Error::Format(_))
    ));
    let mut shuffled = tr.clone();
    shuffled.records.swap(0, 1);
    assert!(matches!(
        Transcript::parse(&shuffled.to_jsonl()),
        Err(Error::Format(_))
    ));
    let mut lying = tr.clone();
    lying.records[0].correct = !lying.records[0].correct;
    assert!(matches!(
        Transcript::parse(&lying.to_jsonl()),
        Err(Error::Format(_))
    ));
}

#[test]
fn replay_under_the_recorded_config_is_bit_exact() {
    let env = env(4);
    for role in [RoleConfig::AgentListener, RoleConfig::AgentSpeaker] {
        let out = run_selfplay(&env, &selfplay(role), 2).unwrap();
        let tr = &out.transcript;
        let before = tr.clone();
        let rep = replay(&env, tr, &ReplayVariant::recorded(tr)).unwrap();
        assert_eq!(tr, &before);
        assert_eq!(rep.final_params.hash(), out.final_params.hash());
        if role == RoleConfig::AgentListener {
            for (r, t) in tr.records.iter().zip(&rep.trials) {
                assert_eq!(r.listener_posterior, t.posterior);
                assert_eq!(r.choice_id, t.choice_id);
            }
        }
    }
}

#[test]
fn replay_without_contrast_takes_a_different_path() {
    let env = env(5);
    let tr = run_selfplay(&env, &selfplay(RoleConfig::AgentListener), 3)
        .unwrap()
        .transcript;
    let mut variant = ReplayVariant::recorded(&tr);
    variant.adaptation.coefficients.contrastive = 0.0;
    let rep = replay(&env, &tr, &variant).unwrap();
    assert!(tr
        .records
        .iter()
        .zip(&rep.trials)
        .any(|(r, t)| r.listener_posterior != t.posterior));
}

#[test]
fn frozen_replay_reads_every_trial_with_the_snapshot() {
    let env = env(6);
    let tr = run_selfplay(&env, &selfplay(RoleConfig::AgentListener), 4)
        .unwrap()
        .transcript;
    let rep = replay(&env, &tr, &ReplayVariant::frozen()).unwrap();
    assert_eq!(rep.final_params.hash(), env.snapshot().hash());
    let first = &rep.trials[0];
    assert_eq!(first.posterior, tr.records[0].listener_posterior);
}

#[test]
fn replay_of_an_empty_transcript_is_empty() {
    let env = env(6);
    let mut tr = run_selfplay(&env, &selfplay(RoleConfig::AgentListener), 4)
        .unwrap()
        .transcript;
    tr.records.clear();
    let rep = replay(&env, &tr, &ReplayVariant::recorded(&tr)).unwrap();
    assert!(rep.trials.is_empty());
}

#[test]
fn replay_rejects_transcripts_from_another_model() {
    let env_a = env(7);
    let env_b = env(8);
    let tr = run_selfplay(&env_a, &selfplay(RoleConfig::AgentListener), 0)
        .unwrap()
        .transcript;
    assert!(matches!(
        replay(&env_b, &tr, &ReplayVariant::recorded(&tr)),
        Err(Error::Input(_))
    ));
}

#[test]
fn speaker_updates_follow_successes() {
    let env = env(9);
    let out = run_selfplay(&env, &selfplay(RoleConfig::AgentSpeaker), 11).unwrap();
    for r in &out.transcript.records {
        assert_eq!(r.update_applied, r.correct);
    }
}

#[test]
fn snapshots_reproduce_each_trial() {
    let env = env(10);
    let mut cfg = selfplay(RoleConfig::AgentListener);
    cfg.session.keep_snapshots = true;
    let out = run_selfplay(&env, &cfg, 12).unwrap();
    assert_eq!(out.snapshots.len(), 24);
    assert_eq!(out.snapshots[0].hash(), env.snapshot().hash());
    let ctx = &out.transcript.header.context;
    for (k, r) in out.transcript.records.iter().enumerate() {
        let u = Utterance::from_tokens(r.utterance_tokens.clone()).unwrap();
        let feats: Vec<&[f64]> = ctx
            .members
            .iter()
            .map(|&m| env.pool.get(m).unwrap().features.as_slice())
            .collect();
        let (_, post) = crate::agents::listener_choose(&out.snapshots[k], &u, &feats).unwrap();
        assert_eq!(post, r.listener_posterior);
    }
}

#[test]
fn moves_from_the_wrong_role_are_protocol_errors() {
    let env = env(11);
    let ctx = build_simple_context(&env.pool, 0).unwrap();
    let mut listener = GameSession::new(
        &env,
        "l",
        RoleConfig::AgentListener,
        ctx.clone(),
        session_config(),
        0,
    )
    .unwrap();
    let u = Utterance::from_content(&[env.vocab.the()]).unwrap();
    assert!(matches!(
        listener.run_trial(&env, SpeakerMove::Agent, ListenerMove::Agent),
        Err(Error::Protocol(_))
    ));
    assert!(matches!(
        listener.run_trial(
            &env,
            SpeakerMove::Partner(u.clone()),
            ListenerMove::Partner(ctx.members[0])
        ),
        Err(Error::Protocol(_))
    ));
    assert!(matches!(
        listener.agent_utterance(&env),
        Err(Error::Protocol(_))
    ));
    assert_eq!(listener.trial_index(), 0);

    let mut speaker = GameSession::new(
        &env,
        "s",
        RoleConfig::AgentSpeaker,
        ctx.clone(),
        session_config(),
        0,
    )
    .unwrap();
    assert!(matches!(
        speaker.run_trial(&env, SpeakerMove::Partner(u), ListenerMove::Agent),
        Err(Error::Protocol(_))
    ));
    let outsider = env.pool.ids().find(|id| !ctx.contains(*id)).unwrap();
    assert!(matches!(
        speaker.run_trial(&env, SpeakerMove::Agent, ListenerMove::Partner(outsider)),
        Err(Error::Input(_))
    ));
}

#[test]
fn finished_games_refuse_further_trials() {
    let env = env(12);
    let ctx = build_simple_context(&env.pool, 1).unwrap();
    let cfg = SessionConfig {
        blocks: 1,
        ..session_config()
    };
    let mut s = GameSession::new(&env, "x", RoleConfig::AgentSpeaker, ctx.clone(), cfg, 1).unwrap();
    let first = s.agent_utterance(&env).unwrap();
    assert_eq!(first, s.agent_utterance(&env).unwrap());
    while let Some(target) = s.current_target() {
        s.run_trial(&env, SpeakerMove::Agent, ListenerMove::Partner(target))
            .unwrap();
    }
    assert!(s.is_finished());
    assert!(s.records().iter().all(|r| r.correct && r.update_applied));
    assert!(matches!(
        s.run_trial(&env, SpeakerMove::Agent, ListenerMove::Partner(ObjectId(0))),
        Err(Error::Protocol(_))
    ));
}

#[test]
fn timing_is_recorded_only_on_request() {
    let env = env(13);
    let ctx = build_simple_context(&env.pool, 2).unwrap();
    let cfg = SessionConfig {
        record_timing: true,
        ..session_config()
    };
    let mut s =
        GameSession::new(&env, "t", RoleConfig::AgentListener, ctx.clone(), cfg, 2).unwrap();
    let partner = ScriptedPartner::new(2);
    let target = s.current_target().unwrap();
    let u = partner
        .speak(target, &ctx, &env.pool, &env.vocab, 1)
        .unwrap();
    let r = s
        .run_trial(&env, SpeakerMove::Partner(u), ListenerMove::Agent)
        .unwrap();
    let w = r.wall_times.unwrap();
    assert!(w.respond_ms >= 0.0 && w.adapt_ms >= 0.0);
}

#[test]
fn frozen_sessions_never_update() {
    let env = env(14);
    let mut cfg = selfplay(RoleConfig::AgentListener);
    cfg.session.adapt = false;
    let out = run_selfplay(&env, &cfg, 3).unwrap();
    assert!(out.transcript.records.iter().all(|r| !r.update_applied));
    assert_eq!(out.final_params.hash(), env.snapshot().hash());
}

#[test]
fn restore_resumes_at_the_recorded_trial_boundary() {
    let env = env(3);
    for role in [RoleConfig::AgentListener, RoleConfig::AgentSpeaker] {
        let full = run_selfplay(&env, &selfplay(role), 5).unwrap();
        let mut partial = full.transcript.clone();
        partial.records.truncate(9);
        let mut restored = GameSession::restore(&env, &partial, false, false).unwrap();
        assert_eq!(restored.trial_index(), 9);
        assert_eq!(restored.records(), &partial.records[..]);
        let partner = ScriptedPartner::new(5);
        while let Some(target) = restored.current_target() {
            match role {
                RoleConfig::AgentListener => {
                    let u = partner
                        .speak(
                            target,
                            restored.context(),
                            &env.pool,
                            &env.vocab,
                            restored.repetition(),
                        )
                        .unwrap();
                    restored
                        .run_trial(&env, SpeakerMove::Partner(u), ListenerMove::Agent)
                        .unwrap();
                }
                RoleConfig::AgentSpeaker => {
                    restored
                        .run_trial(&env, SpeakerMove::Agent, ListenerMove::Scripted(partner))
                        .unwrap();
                }
            }
        }
        assert_eq!(restored.transcript().to_jsonl(), full.transcript.to_jsonl());
        assert_eq!(restored.agent().params().hash(), full.final_params.hash());
    }
}

#[test]
fn restore_rejects_tampered_records() {
    let env = env(3);
    let mut t = run_selfplay(&env, &selfplay(RoleConfig::AgentListener), 6)
        .unwrap()
        .transcript;
    t.records.truncate(4);
    let r = &mut t.records[2];
    let other = r
        .context_object_ids
        .iter()
        .copied()
        .find(|&m| m != r.choice_id)
        .unwrap();
    r.correct = other == r.target_id;
    r.choice_id = other;
    assert!(matches!(
        GameSession::restore(&env, &t, false, false),
        Err(Error::Format(_))
    ));
}
