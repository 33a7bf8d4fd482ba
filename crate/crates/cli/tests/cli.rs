use std::path::Path;
use std::process::Command;

fn ige(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ige"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

const SMALL: &str = r#"
name = "tiny"
seeds = [0, 1]

[env]
kind = "deepsea"
size = 4

[intrinsic]
method = "ige"

[agent]
total_steps = 512
rollout_length = 128
eval_episodes = 2
final_eval_episodes = 4
"#;

#[test]
fn train_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.toml"), SMALL).unwrap();
    let out = ige(&["train", "--config", "tiny.toml", "--out", "runs"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("runs/tiny");
    for seed in ["0", "1"] {
        for f in ["episodes.jsonl", "summary.json", "checkpoint.bin", "dictionary.json"] {
            assert!(run.join(seed).join(f).exists(), "missing {seed}/{f}");
        }
    }
    assert!(run.join("aggregate.csv").exists());

    let out = ige(&["plot", "--run", "runs/tiny", "--out", "charts"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("charts/returns.svg").exists());
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.toml"), SMALL).unwrap();
    let out = ige(
        &["train", "--config", "tiny.toml", "--seed", "7", "--method", "count", "--out", "o"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/tiny/7/episodes.jsonl").exists());
    assert!(!dir.path().join("o/tiny/0").exists());
    assert!(!dir.path().join("o/tiny/7/dictionary.json").exists());
}

#[test]
fn config_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "seeds = []\n[env]\nkind = \"deepsea\"\nsize = 4\n").unwrap();
    let out = ige(&["train", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = ige(&["train"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = ige(&["train", "--env", "deepsea8", "--lambda=-1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = ige(&["train", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn direct_oracle_solves_short_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = ige(&["direct", "--env", "seqchain3", "--seed", "0", "--out", "d"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("success rate 1.000"), "{text}");
}

#[test]
fn empty_plot_request_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ige(&["plot", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ige_core::harness::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}
