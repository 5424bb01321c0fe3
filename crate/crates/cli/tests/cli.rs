use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use anyhow::Result;

const SMALL: &str = r#"
games = 2

[setup.world]
pool_size = 200

[setup.pretrain]
embed_dim = 16
hidden_dim = 24
max_epochs = 8
"#;

fn refgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refgame"))
        .args(["--log", "warn"])
        .args(args)
        .env_remove("REFGAME_CHECKPOINT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = refgame(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_config(dir: &Path) -> PathBuf {
    let p = dir.join("small.toml");
    fs::write(&p, SMALL).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn selfplay_with_one_seed_is_byte_identical_across_runs() -> Result<()> {
    let tmp = tempfile::tempdir()?;
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("sp");
    ok(&[
        "selfplay",
        "--seed",
        "7",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
    ]);
    ok(&[
        "selfplay",
        "--seed",
        "7",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
    ]);
    let first = read_dir_sorted(&out.join("transcripts"));
    let second = read_dir_sorted(&tmp.path().join("sp-1/transcripts"));
    assert_eq!(
        first.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(),
        ["g7.jsonl", "g8.jsonl"]
    );
    assert_eq!(first, second);
    assert_eq!(
        fs::read(out.join("metrics.tsv"))?,
        fs::read(tmp.path().join("sp-1/metrics.tsv"))?
    );
    let resolved = fs::read_to_string(out.join("resolved-config.toml"))?;
    assert!(resolved.contains("subcommand = \"selfplay\""));
    assert!(resolved.contains("seed = 7"));
    assert!(resolved.contains("pool_size = 200"));
    Ok(())
}

#[test]
fn gradcheck_passes_on_the_default_dimensions() -> Result<()> {
    let tmp = tempfile::tempdir()?;
    let out = tmp.path().join("gc");
    let stdout = ok(&["gradcheck", "--out", s(&out)]);
    assert!(stdout.contains("gradcheck passed"), "{stdout}");
    let tsv = fs::read_to_string(out.join("gradcheck.tsv"))?;
    assert!(tsv.lines().count() > 3);
    Ok(())
}

#[test]
fn gradcheck_fails_with_a_nonzero_exit_when_the_tolerance_is_missed() -> Result<()> {
    let tmp = tempfile::tempdir()?;
    let out = refgame(&[
        "gradcheck",
        "--seeds",
        "2",
        "--tolerance",
        "1e-14",
        "--out",
        s(&tmp.path().join("gc")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAILED"));
    Ok(())
}

#[test]
fn ablate_emits_one_row_per_requested_variant() -> Result<()> {
    let tmp = tempfile::tempdir()?;
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("ab");
    ok(&[
        "ablate",
        "--no-pragmatics",
        "--no-rehearsal",
        "--full",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
    ]);
    let tsv = fs::read_to_string(out.join("ablation.tsv"))?;
    let variants: Vec<&str> = tsv
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(variants, ["full", "no-pragmatics", "no-rehearsal"]);
    assert_eq!(fs::read_dir(out.join("transcripts"))?.count(), 2);
    Ok(())
}

#[test]
fn recorded_games_feed_replay_metrics_and_ablation() -> Result<()> {
    let tmp = tempfile::tempdir()?;
    let cfg = small_config(tmp.path());
    let model = tmp.path().join("pre");
    ok(&["pretrain", "--config", s(&cfg), "--out", s(&model)]);
    let snapshot: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(model.join("snapshot.json"))?)?;
    let ckpt = model.join("model");
    let games = tmp.path().join("games");
    ok(&[
        "selfplay",
        "--config",
        s(&cfg),
        "--checkpoint",
        s(&ckpt),
        "--out",
        s(&games),
    ]);
    let header = fs::read_to_string(games.join("transcripts/g0.jsonl"))?;
    let header: serde_json::Value = serde_json::from_str(header.lines().next().unwrap())?;
    assert_eq!(header["snapshotHash"], snapshot["hash"]);

    let t = games.join("transcripts");
    let rp = tmp.path().join("rp");
    ok(&[
        "replay",
        "--transcripts",
        s(&t),
        "--variant",
        "frozen",
        "--config",
        s(&cfg),
        "--checkpoint",
        s(&ckpt),
        "--out",
        s(&rp),
    ]);
    assert_eq!(
        fs::read_to_string(rp.join("replay.tsv"))?.lines().count(),
        1 + 2 * 24
    );
    let mt = tmp.path().join("mt");
    ok(&["metrics", "--transcripts", s(&t), "--out", s(&mt)]);
    assert_eq!(
        fs::read(mt.join("metrics.tsv"))?,
        fs::read(games.join("metrics.tsv"))?
    );
    let ab = tmp.path().join("ab");
    let table = ok(&[
        "ablate",
        "--frozen",
        "--transcripts",
        s(&t),
        "--config",
        s(&cfg),
        "--checkpoint",
        s(&ckpt),
        "--out",
        s(&ab),
    ]);
    assert!(table.lines().nth(1).unwrap().starts_with("frozen\t2\t"));
    Ok(())
}

#[test]
fn eval_forgetting_writes_one_paired_row_per_game() -> Result<()> {
    let tmp = tempfile::tempdir()?;
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("fg");
    let stdout = ok(&[
        "eval-forgetting",
        "--seed",
        "3",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
    ]);
    assert!(stdout.contains("sign test"));
    let tsv = fs::read_to_string(out.join("forgetting.tsv"))?;
    let seeds: Vec<&str> = tsv
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(seeds, ["3", "4"]);
    Ok(())
}

#[test]
fn usage_errors_exit_with_status_two() {
    for args in [
        &["bogus"][..],
        &["selfplay", "--nope"],
        &["replay"],
        &["selfplay", "--role", "referee"],
    ] {
        assert_eq!(refgame(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_with_status_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = refgame(&[
        "metrics",
        "--transcripts",
        s(&tmp.path().join("absent")),
        "--out",
        s(&tmp.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn serve_reads_its_flags_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("no-such-model");
    let out = Command::new(env!("CARGO_BIN_EXE_refgame"))
        .args(["--log", "warn", "serve", "--port", "0"])
        .env("REFGAME_CHECKPOINT", &missing)
        .env("REFGAME_DATA_DIR", tmp.path().join("data"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no-such-model"), "{err}");
    assert!(tmp
        .path()
        .join("data/runs/serve/resolved-config.toml")
        .is_file());
}
