use std::fs;
use std::path::Path;

use ige_core::envs::{DeepSeaConfig, EnvConfig, SeqChainConfig};
use ige_core::harness::{
    self, run_direct_baselines, run_robustness_grid, run_sensitivity, run_training, ExperimentConfig,
};
use ige_core::intrinsic::{IntrinsicConfig, IntrinsicMethod};
use ige_core::rater::PromptVariant;

fn small(out: &Path, env: EnvConfig, method: IntrinsicMethod) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("t", env);
    cfg.out_dir = out.to_path_buf();
    cfg.seeds = vec![0, 1, 2, 3, 4];
    cfg.workers = 2;
    cfg.intrinsic = IntrinsicConfig::with_method(method, 0.1);
    cfg.agent.total_steps = 1024;
    cfg.agent.rollout_length = 256;
    cfg.agent.eval_episodes = 2;
    cfg.agent.final_eval_episodes = 5;
    cfg
}

#[test]
fn five_seeds_write_five_streams_and_one_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), EnvConfig::DeepSea(DeepSeaConfig { size: 8 }), IntrinsicMethod::Ige);
    let report = run_training(&cfg).unwrap();
    assert!(report.failures.is_empty());
    let run = cfg.run_dir();
    let streams: Vec<_> = (0..5).map(|s| run.join(s.to_string()).join("episodes.jsonl")).collect();
    assert!(streams.iter().all(|p| p.is_file()));
    let aggregates = fs::read_dir(&run)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("aggregate"))
        .count();
    assert_eq!(aggregates, 1);
    for s in 0..5 {
        let seed_dir = run.join(s.to_string());
        for f in ["checkpoint.bin", "dictionary.json", "summary.json"] {
            assert!(seed_dir.join(f).is_file(), "{s}/{f}");
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for method in [IntrinsicMethod::Ige, IntrinsicMethod::IgeRnd] {
        let env = EnvConfig::SeqChain(SeqChainConfig::new(3));
        let ca = small(a.path(), env.clone(), method);
        let cb = small(b.path(), env, method);
        run_training(&ca).unwrap();
        run_training(&cb).unwrap();
        let read = |c: &ExperimentConfig, f: &str| fs::read(c.run_dir().join(f)).unwrap();
        assert_eq!(read(&ca, "aggregate.csv"), read(&cb, "aggregate.csv"));
        for s in 0..5 {
            let f = format!("{s}/episodes.jsonl");
            assert_eq!(read(&ca, &f), read(&cb, &f), "{method} seed {s}");
        }
    }
}

#[test]
fn zero_lambda_reproduces_the_extrinsic_stream() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let env = EnvConfig::DeepSea(DeepSeaConfig { size: 6 });
    let mut off = small(a.path(), env.clone(), IntrinsicMethod::Ige);
    off.intrinsic.lambda = 0.0;
    off.seeds = vec![3];
    let mut none = small(b.path(), env, IntrinsicMethod::None);
    none.seeds = vec![3];
    run_training(&off).unwrap();
    run_training(&none).unwrap();
    let read = |c: &ExperimentConfig| fs::read(c.run_dir().join("3/episodes.jsonl")).unwrap();
    assert_eq!(read(&off), read(&none));
}

#[test]
fn empty_seed_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), EnvConfig::DeepSea(DeepSeaConfig { size: 4 }), IntrinsicMethod::None);
    cfg.seeds.clear();
    assert!(matches!(run_training(&cfg), Err(ige_core::Error::Config(_))));
}

#[test]
fn sweep_tags_each_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), EnvConfig::DeepSea(DeepSeaConfig { size: 4 }), IntrinsicMethod::Ige);
    cfg.seeds = vec![0, 1];
    let lambdas = [0.001, 0.01, 0.1, 1.0];
    let reports = run_sensitivity(&cfg, &lambdas).unwrap();
    assert_eq!(reports.len(), 4);
    for (l, r) in &reports {
        assert!(r.run_dir.ends_with(harness::lambda_tag(*l)));
        assert_eq!(r.seeds.len(), 2);
    }
    let sweep = fs::read_to_string(cfg.run_dir().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 5);

    let none = small(dir.path(), EnvConfig::DeepSea(DeepSeaConfig { size: 4 }), IntrinsicMethod::Rnd);
    assert!(run_sensitivity(&none, &lambdas).is_err());
}

#[test]
fn grid_evaluates_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), EnvConfig::SeqChain(SeqChainConfig::new(7)), IntrinsicMethod::Ige);
    cfg.seeds = vec![0];
    run_training(&cfg).unwrap();
    cfg.grid.methods = [("ige".to_string(), cfg.run_dir())].into();
    cfg.grid.episodes_per_cell = 20;
    let table = run_robustness_grid(&cfg).unwrap();
    assert_eq!(table.cells.len(), 35);
    assert!(table.cells.iter().all(|c| c.episodes == 20));
}

#[test]
fn direct_oracle_and_corrupted_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), EnvConfig::SeqChain(SeqChainConfig::new(7)), IntrinsicMethod::Ige);
    cfg.seeds = vec![0];
    cfg.direct.episodes = 200;
    let r = run_direct_baselines(&cfg, PromptVariant::Plain).unwrap();
    assert_eq!(r.success_rate, 1.0);
    cfg.rater = ige_core::rater::RaterConfig::corrupted(1.0);
    let r = run_direct_baselines(&cfg, PromptVariant::Plain).unwrap();
    assert_eq!(r.success_rate, 0.0);
}
