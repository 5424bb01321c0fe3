use anyhow::Result;
use refgame::game::{run_selfplay, GameEnv, SelfPlayConfig};
use refgame::metrics::likelihood_curves;
use refgame::setup::SetupConfig;
use refgame::world::ObjectId;

const GAMES: u64 = 20;
/// Share of games whose end-of-game captions gain likelihood.
const MIN_IMPROVED: f64 = 0.95;

fn env() -> Result<GameEnv> {
    let setup = SetupConfig::default();
    Ok(setup.pretrain()?.env(&setup)?)
}

fn unseen(env: &GameEnv, members: &[ObjectId]) -> Vec<ObjectId> {
    env.pool
        .ids()
        .filter(|id| !members.contains(id))
        .step_by(7)
        .take(20)
        .collect()
}

#[test]
fn final_captions_gain_likelihood_and_the_regularizer_limits_drift() -> Result<()> {
    let env = env()?;
    let mut with_kl = SelfPlayConfig::default();
    with_kl.session.keep_snapshots = true;
    let mut without = with_kl.clone();
    without.session.adaptation.coefficients.kl_reg = 0.0;

    let mut improved = 0;
    let (mut drift_kl, mut drift_free) = (0.0, 0.0);
    for seed in 0..GAMES {
        let a = run_selfplay(&env, &with_kl, seed)?;
        let b = run_selfplay(&env, &without, seed)?;
        let members = &a.transcript.header.context.members;
        let u = unseen(&env, members);
        let ca = likelihood_curves(
            &a.transcript,
            &a.snapshots,
            &a.final_params,
            &env.cache,
            &env.pool,
            &u,
        )?;
        let cb = likelihood_curves(
            &b.transcript,
            &b.snapshots,
            &b.final_params,
            &env.cache,
            &env.pool,
            &u,
        )?;
        assert_eq!(ca.len(), a.transcript.records.len() + 1);

        let frozen = env.snapshot().params();
        let mean = |ids: &[ObjectId]| -> Result<f64> {
            let mut total = 0.0;
            for &id in ids {
                let o = env.pool.get(id)?;
                total += frozen.utterance_logprob(&o.features, env.cache.caption(id)?)?;
            }
            Ok(total / ids.len() as f64)
        };
        assert_eq!(ca.initial_targets[0], mean(members)?);
        assert_eq!(ca.unseen[0], mean(&u)?);

        if ca.final_targets[ca.len() - 1] >= ca.final_targets[0] {
            improved += 1;
        }
        drift_kl += ca.unseen[0] - ca.unseen[ca.len() - 1];
        drift_free += cb.unseen[0] - cb.unseen[cb.len() - 1];
    }
    let share = improved as f64 / GAMES as f64;
    assert!(
        share >= MIN_IMPROVED,
        "final captions improved in {improved} of {GAMES} games"
    );
    assert!(
        drift_kl <= drift_free,
        "unseen drift {drift_kl:.3} with the regularizer vs {drift_free:.3} without"
    );
    Ok(())
}
