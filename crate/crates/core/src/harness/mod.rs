//! Seeded experiment orchestration: training runs over a worker pool,
//! metrics files, the λ sweep, the noise × horizon grid, direct-rater
//! baselines, dictionary pre-population and SVG charts.

pub mod config;
pub mod grid;
pub mod plot;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use config::{parse_env, DirectConfig, ExperimentConfig, GridConfig, Overrides, SweepConfig};
pub use grid::{run_robustness_grid, GridCell, GridTable};
pub use plot::{curves_svg, emit_plots, grid_svg, plot_curves, plot_grid};

pub use crate::envs::normalize_return;

use crate::agent::{
    run_direct_episode, save_checkpoint, stream_rng, train, EpisodeRecord, RecordKind, StepLog, Stream,
    TrainObserver, TrainSpec,
};
use crate::envs::{EnvConfig, EnvKind, EnvObservation, Facts};
use crate::error::{Error, Result};
use crate::intrinsic::IntrinsicMethod;
use crate::rater::{describe_state, PromptVariant, Rater, RaterKind, RatingDictionary};

/// Per-step hook: `(seed, step)`.
pub type StepHook<'a> = &'a (dyn Fn(u64, &StepLog) + Sync);

/// Mean ± std across seeds of the greedy evaluation return at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub global_step: u64,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub final_normalized_return: f64,
    pub final_success_rate: f64,
    pub global_steps: u64,
    pub train_episodes: u64,
    pub updates: u64,
    pub backend_calls: u64,
    pub fallbacks: u64,
    pub retries: u64,
    pub dictionary_entries: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingReport {
    pub run_dir: PathBuf,
    pub seeds: Vec<SeedSummary>,
    pub failures: Vec<(u64, String)>,
    pub aggregate: Vec<AggregatePoint>,
    /// Mean across seeds of the final greedy evaluation.
    pub final_mean: f64,
    pub final_std: f64,
    /// A remote rater gave up on at least one query.
    pub remote_exhausted: bool,
}

/// Streams records to `episodes.jsonl` and keeps each evaluation's mean.
struct RunObserver<'a> {
    out: BufWriter<File>,
    seed: u64,
    hook: Option<StepHook<'a>>,
    curve: Vec<(u64, f64, usize)>,
    error: Option<std::io::Error>,
}

impl TrainObserver for RunObserver<'_> {
    fn on_record(&mut self, r: &EpisodeRecord) {
        if self.error.is_none() {
            let line = serde_json::to_string(r).expect("records serialize");
            if let Err(e) = writeln!(self.out, "{line}") {
                self.error = Some(e);
            }
        }
        if matches!(r.kind, RecordKind::Eval | RecordKind::Final) {
            match self.curve.last_mut() {
                Some((step, total, n)) if *step == r.global_step => {
                    *total += r.normalized_return;
                    *n += 1;
                }
                _ => self.curve.push((r.global_step, r.normalized_return, 1)),
            }
        }
    }

    fn on_step(&mut self, step: &StepLog) {
        if let Some(hook) = self.hook {
            hook(self.seed, step);
        }
    }
}

/// Runs `jobs` on `workers` threads; results come back in job order.
pub fn parallel_map<T: Sync, U: Send>(jobs: &[T], workers: usize, f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<U>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let r = f(&jobs[i]);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(|r| r.expect("every job ran")).collect()
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

struct SeedRun {
    summary: SeedSummary,
    curve: Vec<(u64, f64)>,
}

fn run_seed(cfg: &ExperimentConfig, seed: u64, hook: Option<StepHook>) -> Result<SeedRun> {
    let dir = cfg.run_dir().join(seed.to_string());
    create_dir(&dir)?;
    let dictionary = match &cfg.preload_dictionaries {
        Some(from) => Some(RatingDictionary::load(&from.join(seed.to_string()).join("dictionary.json"))?),
        None => None,
    };
    let spec = TrainSpec {
        env: cfg.env.clone(),
        intrinsic: cfg.intrinsic.clone(),
        rater: cfg.rater.clone(),
        ppo: cfg.agent.clone(),
        seed,
        dictionary,
    };
    let path = dir.join("episodes.jsonl");
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut observer = RunObserver {
        out: BufWriter::new(file),
        seed,
        hook,
        curve: Vec::new(),
        error: None,
    };
    let start = Instant::now();
    let outcome = train(&spec, &mut observer)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    if let Some(e) = observer.error.take() {
        return Err(Error::io(&path, e));
    }
    observer.out.flush().map_err(|e| Error::io(&path, e))?;

    save_checkpoint(&outcome.nets, &dir.join("checkpoint.bin"))?;
    let mut dictionary_entries = 0;
    if let Some(d) = &outcome.dictionary {
        dictionary_entries = d.len();
        d.save(&dir.join("dictionary.json"))?;
    }
    let summary = SeedSummary {
        seed,
        final_normalized_return: outcome.final_normalized_return,
        final_success_rate: outcome.final_success_rate,
        global_steps: outcome.global_steps,
        train_episodes: outcome.train_episodes,
        updates: outcome.updates,
        backend_calls: outcome.backend_calls,
        fallbacks: outcome.fallbacks,
        retries: outcome.retries,
        dictionary_entries,
        wall_time_s,
    };
    let summary_path = dir.join("summary.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?).map_err(|e| Error::io(&summary_path, e))?;
    log::info!(
        "{} seed {seed}: final return {:.3} in {wall_time_s:.1}s",
        cfg.name,
        summary.final_normalized_return
    );
    Ok(SeedRun {
        summary,
        curve: observer.curve.into_iter().map(|(s, total, n)| (s, total / n as f64)).collect(),
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Pointwise mean and population std over seeds sharing an evaluation step.
pub fn aggregate_curves(curves: &[Vec<(u64, f64)>]) -> Vec<AggregatePoint> {
    let mut steps: Vec<u64> = curves.iter().flatten().map(|&(s, _)| s).collect();
    steps.sort_unstable();
    steps.dedup();
    steps
        .into_iter()
        .map(|step| {
            let values: Vec<f64> = curves
                .iter()
                .filter_map(|c| c.iter().find(|&&(s, _)| s == step).map(|&(_, v)| v))
                .collect();
            let (mean, std) = mean_std(&values);
            AggregatePoint {
                global_step: step,
                mean,
                std,
                n: values.len(),
            }
        })
        .collect()
}

pub fn write_aggregate(path: &Path, points: &[AggregatePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    for p in points {
        w.serialize(p).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregatePoint>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Parse(format!("{}: {e}", path.display()))))
        .collect()
}

/// One training run per seed, executed on `cfg.workers` threads. A failing
/// seed is recorded and the others continue.
pub fn run_training(cfg: &ExperimentConfig) -> Result<TrainingReport> {
    run_training_with(cfg, None)
}

pub fn run_training_with(cfg: &ExperimentConfig, hook: Option<StepHook>) -> Result<TrainingReport> {
    cfg.validate()?;
    let run_dir = cfg.run_dir();
    create_dir(&run_dir)?;
    let config_path = run_dir.join("config.toml");
    fs::write(&config_path, cfg.to_toml()?).map_err(|e| Error::io(&config_path, e))?;

    let results = parallel_map(&cfg.seeds, cfg.workers, |&seed| run_seed(cfg, seed, hook));
    let mut seeds = Vec::new();
    let mut curves = Vec::new();
    let mut failures = Vec::new();
    for (&seed, r) in cfg.seeds.iter().zip(results) {
        match r {
            Ok(run) => {
                seeds.push(run.summary);
                curves.push(run.curve);
            }
            Err(e) => {
                log::error!("{} seed {seed} failed: {e}", cfg.name);
                failures.push((seed, e.to_string()));
            }
        }
    }
    let aggregate = aggregate_curves(&curves);
    write_aggregate(&run_dir.join("aggregate.csv"), &aggregate)?;
    let summary_path = run_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary_path).map_err(|e| Error::Parse(e.to_string()))?;
    for s in &seeds {
        w.serialize(s).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(&summary_path, e))?;

    let finals: Vec<f64> = seeds.iter().map(|s| s.final_normalized_return).collect();
    let (final_mean, final_std) = mean_std(&finals);
    let remote_exhausted = cfg.rater.kind == RaterKind::RemoteLlm && seeds.iter().any(|s| s.fallbacks > 0);
    Ok(TrainingReport {
        run_dir,
        seeds,
        failures,
        aggregate,
        final_mean,
        final_std,
        remote_exhausted,
    })
}

/// Formats λ for directory names without float noise, e.g. `0.001`.
pub fn lambda_tag(lambda: f64) -> String {
    format!("lambda-{lambda}")
}

/// One [`run_training`] per λ, each under `<run_dir>/lambda-<λ>`, plus a
/// `sweep.csv` of final returns.
pub fn run_sensitivity(base: &ExperimentConfig, lambdas: &[f64]) -> Result<Vec<(f64, TrainingReport)>> {
    if !base.intrinsic.method.uses_rater() {
        return Err(Error::Config(format!(
            "the lambda sweep needs a rating method, got '{}'",
            base.intrinsic.method
        )));
    }
    let mut out = Vec::new();
    for &lambda in lambdas {
        let mut cfg = base.clone();
        cfg.name = format!("{}/{}", base.name, lambda_tag(lambda));
        cfg.intrinsic.lambda = lambda;
        out.push((lambda, run_training(&cfg)?));
    }
    #[derive(Serialize)]
    struct Row {
        lambda: f64,
        final_mean: f64,
        final_std: f64,
        seeds: usize,
    }
    let path = base.run_dir().join("sweep.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Parse(e.to_string()))?;
    for (lambda, r) in &out {
        w.serialize(Row {
            lambda: *lambda,
            final_mean: r.final_mean,
            final_std: r.final_std,
            seeds: r.seeds.len(),
        })
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectReport {
    pub run_dir: PathBuf,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_normalized_return: f64,
    pub backend_calls: u64,
    pub remote_exhausted: bool,
}

/// Episodes played by the argmax of the rater's scores, without training.
/// The prompt variant only changes what a remote rater is sent.
pub fn run_direct_baselines(cfg: &ExperimentConfig, variant: PromptVariant) -> Result<DirectReport> {
    cfg.validate()?;
    let mut rater_cfg = cfg.rater.clone();
    rater_cfg.variant = variant;
    let run_dir = cfg.run_dir();
    let names = cfg.env.action_names();
    let kind = cfg.env.kind();
    let mut total = DirectReport {
        run_dir: run_dir.clone(),
        episodes: 0,
        successes: 0,
        success_rate: 0.0,
        mean_normalized_return: 0.0,
        backend_calls: 0,
        remote_exhausted: false,
    };
    let mut return_sum = 0.0;
    for &seed in &cfg.seeds {
        let dir = run_dir.join(seed.to_string());
        create_dir(&dir)?;
        let path = dir.join("episodes.jsonl");
        let mut out = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        let mut env = cfg.env.build()?;
        let mut rng = stream_rng(seed, Stream::Env);
        let backend = rater_cfg.build_backend(kind, stream_rng(seed, Stream::Rater).random())?;
        let mut rater = Rater::new(backend, RatingDictionary::new(seed, names.clone()));
        for episode in 0..cfg.direct.episodes {
            if cfg.direct.fresh_dictionary_per_episode {
                rater.reset_dictionary();
            }
            let r = run_direct_episode(&mut env, &mut rater, &mut rng)?;
            let d = rater.dictionary();
            let record = EpisodeRecord {
                kind: RecordKind::Direct,
                seed,
                global_step: 0,
                episode: episode as u64,
                extrinsic_return: r.extrinsic_return,
                normalized_return: r.normalized_return,
                success: r.success,
                length: r.length,
                mean_intrinsic: 0.0,
                rater_hits: d.hit_count,
                rater_misses: d.miss_count,
            };
            writeln!(out, "{}", serde_json::to_string(&record)?).map_err(|e| Error::io(&path, e))?;
            total.episodes += 1;
            total.successes += r.success as usize;
            return_sum += r.normalized_return;
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
        total.backend_calls += rater.backend_calls();
        total.remote_exhausted |= rater_cfg.kind == RaterKind::RemoteLlm && rater.fallbacks() > 0;
        if !cfg.direct.fresh_dictionary_per_episode {
            rater.dictionary().save(&dir.join("dictionary.json"))?;
        }
    }
    if total.episodes > 0 {
        total.success_rate = total.successes as f64 / total.episodes as f64;
        total.mean_normalized_return = return_sum / total.episodes as f64;
    }
    Ok(total)
}

/// Every state an episode of `env` can reach from its reset distribution,
/// terminal states excluded.
pub fn enumerate_states(env: &EnvConfig) -> Vec<EnvObservation> {
    match env {
        EnvConfig::DeepSea(c) => {
            let g = c.size - 1;
            (0..g)
                .flat_map(|row| {
                    (0..=row).map(move |col| EnvObservation {
                        numeric: vec![col as f64, row as f64, g as f64, g as f64],
                        facts: Facts::DeepSea {
                            col,
                            row,
                            goal_col: g,
                            goal_row: g,
                        },
                    })
                })
                .collect()
        }
        EnvConfig::SeqChain(c) => {
            let n = c.macro_action_names.len();
            let names: std::sync::Arc<[String]> = c.macro_action_names.clone().into();
            (n - c.case..n)
                .map(|done| EnvObservation {
                    numeric: Vec::new(),
                    facts: Facts::SeqChain {
                        flags: (0..n).map(|i| i < done).collect(),
                        names: names.clone(),
                    },
                })
                .collect()
        }
    }
}

/// Rates every reachable state once per seed and writes
/// `<run_dir>/<seed>/dictionary.json`.
pub fn build_dictionaries(cfg: &ExperimentConfig) -> Result<Vec<(u64, RatingDictionary)>> {
    cfg.validate()?;
    let states = enumerate_states(&cfg.env);
    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        let backend = cfg.rater.build_backend(cfg.env.kind(), stream_rng(seed, Stream::Rater).random())?;
        let mut rater = Rater::new(backend, RatingDictionary::new(seed, cfg.env.action_names()));
        for s in &states {
            rater.rate(&describe_state(s));
        }
        if rater.fallbacks() > 0 && cfg.rater.kind == RaterKind::RemoteLlm {
            return Err(Error::Backend(format!("{} states could not be rated", rater.fallbacks())));
        }
        let dir = cfg.run_dir().join(seed.to_string());
        create_dir(&dir)?;
        let d = rater.into_dictionary();
        d.save(&dir.join("dictionary.json"))?;
        out.push((seed, d));
    }
    Ok(out)
}

/// Label used for a method in charts and grid files.
pub fn method_label(method: IntrinsicMethod) -> String {
    method.to_string()
}

pub fn env_kind_name(kind: EnvKind) -> &'static str {
    match kind {
        EnvKind::DeepSea => "deepsea",
        EnvKind::SeqChain => "seqchain",
    }
}
