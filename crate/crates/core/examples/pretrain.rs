//! Fits the captioner to the synthetic corpus, saves it, and reloads it.
//!
//! cargo run --example pretrain -p refgame

use anyhow::Result;
use refgame::captioner::Utterance;
use refgame::setup::SetupConfig;

fn main() -> Result<()> {
    let setup = SetupConfig::default();
    let p = setup.pretrain()?;
    let report = p.report.as_ref().expect("fresh pretraining has a report");
    println!(
        "{} objects, vocabulary {}, {} parameters",
        p.pool.len(),
        p.vocab.len(),
        p.params.parameter_count()
    );
    for (epoch, (train, val)) in report
        .train_loss
        .iter()
        .zip(&report.validation_loss)
        .enumerate()
    {
        println!("epoch {epoch:2}  train {train:.4}  validation {val:.4}");
    }
    println!("kept epoch {}", report.best_epoch);

    for o in p.pool.objects.iter().take(5) {
        let caption = p.params.greedy_decode(&o.features, setup.max_decode_len)?;
        let full = Utterance::parse(&o.describe(&p.pool.schema), &p.vocab)?.0;
        println!(
            "{:<34} -> {:<24} log P(full description) {:.2}",
            o.describe(&p.pool.schema),
            caption.render(&p.vocab),
            p.params.utterance_logprob(&o.features, &full)?
        );
    }

    let dir = tempfile::tempdir()?;
    p.save(dir.path())?;
    let loaded = setup.load(dir.path())?;
    assert_eq!(loaded.snapshot.hash(), p.snapshot.hash());
    println!(
        "checkpoint round trip ok, snapshot {}",
        &p.snapshot.hash()[..16]
    );
    Ok(())
}
