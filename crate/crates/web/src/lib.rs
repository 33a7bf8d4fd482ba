//! WebAssembly bindings for the static demo page in `www/`.

use ige_core::agent::{run_direct_episode, stream_rng, train, EpisodeRecord, PpoConfig, RecordKind, Stream, TrainSpec};
use ige_core::envs::{DeepSeaConfig, EnvConfig, SeqChainConfig};
use ige_core::harness::{curves_svg, AggregatePoint};
use ige_core::intrinsic::{combine, CombinerConfig, IntrinsicConfig, IntrinsicMethod};
use ige_core::rater::{Rater, RaterConfig, RatingDictionary};
use rand::Rng;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// `(step, bonus)` pairs for a rating of 1 under the given scale and decay
/// horizon, flattened as `[t0, b0, t1, b1, ...]`.
pub fn decay_points(lambda: f64, decay_fraction: f64, total_steps: u64, samples: usize) -> Vec<f64> {
    let cfg = CombinerConfig {
        lambda,
        decay_steps: ((total_steps as f64 * decay_fraction) as u64).max(1),
        decay_enabled: decay_fraction > 0.0,
    };
    let samples = samples.max(2);
    (0..samples)
        .flat_map(|i| {
            let t = total_steps * i as u64 / (samples - 1) as u64;
            [t as f64, combine(0.0, 1.0, &cfg, t)]
        })
        .collect()
}

/// Success rate of argmax play on the seven-step chain with a corrupted
/// oracle. Corruption is redrawn every episode.
pub fn direct_success_rate(epsilon: f64, episodes: usize, seed: u64) -> ige_core::Result<f64> {
    let env_cfg = EnvConfig::SeqChain(SeqChainConfig::new(7));
    let mut env = env_cfg.build()?;
    let rater_cfg = RaterConfig::corrupted(epsilon);
    let backend = rater_cfg.build_backend(env_cfg.kind(), stream_rng(seed, Stream::Rater).random())?;
    let mut rater = Rater::new(backend, RatingDictionary::new(seed, env_cfg.action_names()));
    let mut rng = stream_rng(seed, Stream::Env);
    let mut wins = 0;
    for _ in 0..episodes {
        rater.reset_dictionary();
        wins += run_direct_episode(&mut env, &mut rater, &mut rng)?.success as usize;
    }
    Ok(wins as f64 / episodes.max(1) as f64)
}

/// Greedy-evaluation curve, mean and std over seeds.
pub fn deepsea_curve(size: usize, method: IntrinsicMethod, lambda: f64, steps: u64, seeds: u64) -> ige_core::Result<Vec<AggregatePoint>> {
    let mut per_seed: Vec<Vec<EpisodeRecord>> = Vec::new();
    for seed in 0..seeds {
        let spec = TrainSpec {
            env: EnvConfig::DeepSea(DeepSeaConfig { size }),
            intrinsic: IntrinsicConfig::with_method(method, lambda),
            rater: RaterConfig::default(),
            ppo: PpoConfig {
                total_steps: steps,
                rollout_length: 512,
                eval_episodes: 5,
                final_eval_episodes: 20,
                ..PpoConfig::default()
            },
            seed,
            dictionary: None,
        };
        let mut records = Vec::new();
        train(&spec, &mut records)?;
        records.retain(|r| matches!(r.kind, RecordKind::Eval | RecordKind::Final));
        per_seed.push(records);
    }
    let mut steps: Vec<u64> = per_seed.iter().flatten().map(|r| r.global_step).collect();
    steps.sort_unstable();
    steps.dedup();
    Ok(steps
        .into_iter()
        .map(|step| {
            let means: Vec<f64> = per_seed
                .iter()
                .filter_map(|recs| {
                    let at: Vec<f64> = recs.iter().filter(|r| r.global_step == step).map(|r| r.normalized_return).collect();
                    (!at.is_empty()).then(|| at.iter().sum::<f64>() / at.len() as f64)
                })
                .collect();
            let n = means.len();
            let mean = means.iter().sum::<f64>() / n as f64;
            let std = (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            AggregatePoint {
                global_step: step,
                mean,
                std,
                n,
            }
        })
        .collect())
}

#[wasm_bindgen]
pub fn decay_schedule(lambda: f64, decay_fraction: f64, total_steps: u32, samples: usize) -> Vec<f64> {
    decay_points(lambda, decay_fraction, total_steps as u64, samples)
}

#[wasm_bindgen]
pub fn direct_success(epsilon: f64, episodes: usize, seed: u32) -> Result<f64, JsError> {
    direct_success_rate(epsilon, episodes, seed as u64).map_err(js_err)
}

/// SVG chart comparing extrinsic-only training with the rating bonus on an
/// `size`×`size` DeepSea.
#[wasm_bindgen]
pub fn deepsea_comparison_svg(size: usize, lambda: f64, steps: u32, seeds: u32) -> Result<String, JsError> {
    let mut series = Vec::new();
    for (label, method) in [("extrinsic only", IntrinsicMethod::None), ("rated bonus", IntrinsicMethod::Ige)] {
        series.push((label.to_string(), deepsea_curve(size, method, lambda, steps as u64, seeds as u64).map_err(js_err)?));
    }
    curves_svg(&series, &format!("DeepSea {size}x{size}")).map_err(js_err)
}
