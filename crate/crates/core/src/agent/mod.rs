//! The PPO learner, greedy evaluation, and the non-learning direct-argmax
//! rater policy.

pub mod ppo;

use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use ppo::{
    compute_gae, minibatch_gradients, normalize_advantages, ppo_update, OptimizerStates, PolicyValueNets, PpoConfig,
    PpoScratch, RolloutBuffer, UpdateStats,
};

use crate::envs::{normalize_return, Env, EnvConfig, EnvObservation, Outcome};
use crate::error::{Error, Result};
use crate::intrinsic::{
    combine, combine_stacked, ige_bonus, state_key, CombinerConfig, IcmNets, IntrinsicConfig, OtherBonus, RndNets,
    RunningStd, Transition, VisitCounts,
};
use crate::numerics::{checkpoint, Workspace};
use crate::rater::{Rater, RaterConfig, RatingDictionary};

/// Independent random streams of one run, all derived from the run seed.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Env = 2,
    Action = 3,
    Shuffle = 4,
    Intrinsic = 5,
    Eval = 6,
    Rater = 7,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Forward-pass scratch for acting without allocation.
pub struct Actor {
    policy_ws: Workspace,
    value_ws: Workspace,
    probs: Vec<f64>,
}

impl Actor {
    pub fn new(nets: &PolicyValueNets) -> Self {
        Self {
            policy_ws: nets.policy.workspace(),
            value_ws: nets.value.workspace(),
            probs: vec![0.0; nets.action_count()],
        }
    }

    /// Samples from `softmax(logits)`; returns `(action, log_prob, value)`.
    pub fn act<R: Rng + ?Sized>(
        &mut self,
        nets: &PolicyValueNets,
        features: &[f64],
        rng: &mut R,
    ) -> Result<(usize, f64, f64)> {
        let logits = nets.policy.forward_into(features, &mut self.policy_ws)?;
        if logits.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite(format!("policy logits {logits:?}")));
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (p, &z) in self.probs.iter_mut().zip(logits) {
            *p = (z - max).exp();
            total += *p;
        }
        self.probs.iter_mut().for_each(|p| *p /= total);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut action = self.probs.len() - 1;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                action = i;
                break;
            }
        }
        let log_prob = self.probs[action].max(f64::MIN_POSITIVE).ln();
        let value = self.value(nets, features)?;
        Ok((action, log_prob, value))
    }

    pub fn value(&mut self, nets: &PolicyValueNets, features: &[f64]) -> Result<f64> {
        Ok(nets.value.forward_into(features, &mut self.value_ws)?[0])
    }

    /// Argmax of the logits, lowest index on ties.
    pub fn greedy(&mut self, nets: &PolicyValueNets, features: &[f64]) -> Result<usize> {
        let logits = nets.policy.forward_into(features, &mut self.policy_ws)?;
        if logits.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite(format!("policy logits {logits:?}")));
        }
        Ok(crate::rater::oracle::argmax(logits).unwrap_or(0))
    }
}

pub fn act<R: Rng + ?Sized>(nets: &PolicyValueNets, features: &[f64], rng: &mut R) -> Result<(usize, f64, f64)> {
    Actor::new(nets).act(nets, features, rng)
}

/// Index of a maximal score, chosen uniformly among ties.
pub fn argmax_random_tie<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> usize {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] == max).collect();
    *best.choose(rng).unwrap_or(&0)
}

/// Rates the state (through the dictionary) and plays its argmax.
pub fn direct_rater_policy<R: Rng + ?Sized>(rater: &mut Rater, obs: &EnvObservation, rng: &mut R) -> usize {
    argmax_random_tie(&rater.rate_observation(obs), rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    /// A stochastic training episode.
    Train,
    /// A greedy evaluation episode after an update.
    Eval,
    /// A greedy evaluation episode after the last update.
    Final,
    /// An episode of the direct-argmax rater policy.
    Direct,
}

/// One line of `episodes.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub kind: RecordKind,
    pub seed: u64,
    pub global_step: u64,
    pub episode: u64,
    pub extrinsic_return: f64,
    pub normalized_return: f64,
    pub success: bool,
    pub length: u64,
    /// Mean of `r_c - r_e` over the episode's steps.
    pub mean_intrinsic: f64,
    pub rater_hits: u64,
    pub rater_misses: u64,
}

/// Rewards of one environment step as fed to PPO.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub global_step: u64,
    pub extrinsic: f64,
    pub combined: f64,
}

pub trait TrainObserver {
    fn on_record(&mut self, _record: &EpisodeRecord) {}
    fn on_step(&mut self, _step: &StepLog) {}
}

impl TrainObserver for () {}

impl TrainObserver for Vec<EpisodeRecord> {
    fn on_record(&mut self, record: &EpisodeRecord) {
        self.push(record.clone());
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeResult {
    pub extrinsic_return: f64,
    pub normalized_return: f64,
    pub success: bool,
    pub length: u64,
}

/// Greedy rollouts of the policy, no learning.
pub fn evaluate_greedy<R: Rng + ?Sized>(
    nets: &PolicyValueNets,
    env_config: &EnvConfig,
    episodes: usize,
    rng: &mut R,
) -> Result<Vec<EpisodeResult>> {
    let mut env = env_config.build()?;
    let mut actor = Actor::new(nets);
    (0..episodes)
        .map(|_| {
            let mut obs = env.reset(rng);
            let mut ret = 0.0;
            let mut length = 0;
            loop {
                let a = actor.greedy(nets, &env.features(&obs))?;
                let step = env.step(a, rng)?;
                ret += step.extrinsic_reward;
                length += 1;
                if step.done {
                    return Ok(EpisodeResult {
                        extrinsic_return: ret,
                        normalized_return: normalize_return(env.kind(), ret),
                        success: step.outcome == Outcome::Goal,
                        length,
                    });
                }
                obs = step.observation;
            }
        })
        .collect()
}

/// One episode driven by [`direct_rater_policy`].
pub fn run_direct_episode<R: Rng + ?Sized>(env: &mut Env, rater: &mut Rater, rng: &mut R) -> Result<EpisodeResult> {
    let mut obs = env.reset(rng);
    let mut ret = 0.0;
    let mut length = 0;
    loop {
        let a = direct_rater_policy(rater, &obs, rng);
        let step = env.step(a, rng)?;
        ret += step.extrinsic_reward;
        length += 1;
        if step.done {
            return Ok(EpisodeResult {
                extrinsic_return: ret,
                normalized_return: normalize_return(env.kind(), ret),
                success: step.outcome == Outcome::Goal,
                length,
            });
        }
        obs = step.observation;
    }
}

pub fn save_checkpoint(nets: &PolicyValueNets, path: &Path) -> Result<()> {
    checkpoint::save(path, &[("policy", &nets.policy), ("value", &nets.value)])
}

pub fn load_checkpoint(path: &Path) -> Result<PolicyValueNets> {
    let mut policy = None;
    let mut value = None;
    for (name, net) in checkpoint::load(path)? {
        match name.as_str() {
            "policy" => policy = Some(net),
            "value" => value = Some(net),
            _ => {}
        }
    }
    match (policy, value) {
        (Some(p), Some(v)) => PolicyValueNets::from_nets(p, v),
        _ => Err(Error::Parse(format!("{} lacks policy or value network", path.display()))),
    }
}

/// Everything one training run needs.
#[derive(Debug, Clone)]
pub struct TrainSpec {
    pub env: EnvConfig,
    pub intrinsic: IntrinsicConfig,
    pub rater: RaterConfig,
    pub ppo: PpoConfig,
    pub seed: u64,
    /// Starting dictionary, e.g. from a previous run or `build-dict`.
    pub dictionary: Option<RatingDictionary>,
}

pub struct TrainOutcome {
    pub nets: PolicyValueNets,
    pub dictionary: Option<RatingDictionary>,
    pub backend_calls: u64,
    pub fallbacks: u64,
    pub retries: u64,
    pub updates: u64,
    pub global_steps: u64,
    pub train_episodes: u64,
    /// Mean normalized return of the final greedy evaluation.
    pub final_normalized_return: f64,
    pub final_success_rate: f64,
}

enum Other {
    Count(VisitCounts),
    Icm(Box<IcmNets>, f64),
    Rnd(Box<RndNets>, RunningStd, bool),
}

struct Bonuses {
    rater: Option<Rater>,
    rating: CombinerConfig,
    other: Option<Other>,
    other_cfg: CombinerConfig,
}

impl Bonuses {
    fn new(spec: &TrainSpec, env: &Env) -> Result<Self> {
        let cfg = &spec.intrinsic;
        let total = spec.ppo.total_steps;
        let rating = cfg.rating_combiner(total);
        let other_cfg = cfg.other_combiner(total);
        // A zero scale switches a generator off entirely, so such a run is
        // indistinguishable from one without it.
        let rater = if cfg.method.uses_rater() && rating.lambda > 0.0 {
            let backend = spec.rater.build_backend(env.kind(), stream_rng(spec.seed, Stream::Rater).random())?;
            let names = spec.env.action_names();
            let dictionary = match &spec.dictionary {
                Some(d) if d.action_names == names => d.clone(),
                Some(d) => {
                    return Err(Error::Config(format!(
                        "dictionary actions {:?} do not match environment actions {names:?}",
                        d.action_names
                    )))
                }
                None => RatingDictionary::new(spec.seed, names),
            };
            Some(Rater::new(backend, dictionary))
        } else {
            None
        };
        let mut rng = stream_rng(spec.seed, Stream::Intrinsic);
        let (dim, actions) = (env.feature_dim(), env.action_count());
        let other = match cfg.method.other() {
            Some(_) if other_cfg.lambda == 0.0 => None,
            Some(OtherBonus::Count) => Some(Other::Count(VisitCounts::new())),
            Some(OtherBonus::Icm) => Some(Other::Icm(
                Box::new(IcmNets::new(dim, actions, &cfg.icm, &mut rng)?),
                cfg.icm.beta,
            )),
            Some(OtherBonus::Rnd) => Some(Other::Rnd(
                Box::new(RndNets::new(dim, &cfg.rnd, &mut rng)?),
                RunningStd::default(),
                cfg.rnd.normalize,
            )),
            None => None,
        };
        Ok(Self {
            rater,
            rating,
            other,
            other_cfg,
        })
    }

    fn needs_transitions(&self) -> bool {
        matches!(self.other, Some(Other::Icm(..)) | Some(Other::Rnd(..)))
    }

    fn combined(&mut self, r_e: f64, t: &Transition, obs: &EnvObservation, next: &EnvObservation, step: u64) -> Result<f64> {
        let rating = match &mut self.rater {
            Some(rater) => Some(ige_bonus(&rater.rate_observation(obs), t.action)?.0),
            None => None,
        };
        let other = match &mut self.other {
            Some(Other::Count(counts)) => Some(counts.bonus(state_key(next))),
            Some(Other::Icm(icm, _)) => Some(icm.bonus(t)?),
            Some(Other::Rnd(rnd, running, normalize)) => {
                let raw = rnd.bonus(&t.next_state)?;
                running.push(raw);
                Some(if *normalize { running.normalize(raw) } else { raw })
            }
            None => None,
        };
        Ok(match (rating, other) {
            (Some(r), Some(o)) => combine_stacked(r_e, (r, &self.rating), (o, &self.other_cfg), step),
            (Some(r), None) => combine(r_e, r, &self.rating, step),
            (None, Some(o)) => combine(r_e, o, &self.other_cfg, step),
            (None, None) => r_e,
        })
    }

    fn update<R: Rng + ?Sized>(&mut self, transitions: &[Transition], batch: usize, rng: &mut R) -> Result<()> {
        if transitions.is_empty() {
            return Ok(());
        }
        let mut order: Vec<usize> = (0..transitions.len()).collect();
        order.shuffle(rng);
        for chunk in order.chunks(batch) {
            match &mut self.other {
                Some(Other::Icm(icm, beta)) => {
                    let b: Vec<Transition> = chunk.iter().map(|&i| transitions[i].clone()).collect();
                    icm.update(&b, *beta)?;
                }
                Some(Other::Rnd(rnd, ..)) => {
                    let b: Vec<Vec<f64>> = chunk.iter().map(|&i| transitions[i].next_state.clone()).collect();
                    rnd.update(&b)?;
                }
                _ => return Ok(()),
            }
        }
        Ok(())
    }

    fn counts(&self) -> (u64, u64) {
        self.rater
            .as_ref()
            .map_or((0, 0), |r| (r.dictionary().hit_count, r.dictionary().miss_count))
    }
}

fn eval_records(
    results: &[EpisodeResult],
    kind: RecordKind,
    seed: u64,
    global_step: u64,
    counts: (u64, u64),
    observer: &mut dyn TrainObserver,
) {
    for (i, r) in results.iter().enumerate() {
        observer.on_record(&EpisodeRecord {
            kind,
            seed,
            global_step,
            episode: i as u64,
            extrinsic_return: r.extrinsic_return,
            normalized_return: r.normalized_return,
            success: r.success,
            length: r.length,
            mean_intrinsic: 0.0,
            rater_hits: counts.0,
            rater_misses: counts.1,
        });
    }
}

/// Alternates rollouts of `rollout_length` steps (combined rewards computed
/// online) with PPO and intrinsic-model updates until `total_steps`, followed
/// by a greedy evaluation after every update and a final one at the end.
pub fn train(spec: &TrainSpec, observer: &mut dyn TrainObserver) -> Result<TrainOutcome> {
    spec.env.validate()?;
    spec.intrinsic.validate()?;
    spec.ppo.validate()?;
    let ppo = &spec.ppo;
    let mut env = spec.env.build()?;
    let mut init_rng = stream_rng(spec.seed, Stream::Init);
    let mut env_rng = stream_rng(spec.seed, Stream::Env);
    let mut act_rng = stream_rng(spec.seed, Stream::Action);
    let mut shuffle_rng = stream_rng(spec.seed, Stream::Shuffle);
    let mut eval_rng = stream_rng(spec.seed, Stream::Eval);

    let mut nets = PolicyValueNets::new(env.feature_dim(), env.action_count(), &ppo.hidden, &mut init_rng)?;
    let mut optim = OptimizerStates::new(&nets, ppo.learning_rate);
    let mut bonuses = Bonuses::new(spec, &env)?;
    let mut actor = Actor::new(&nets);
    let mut buffer = RolloutBuffer::new(env.feature_dim(), ppo.rollout_length);
    let mut transitions: Vec<Transition> = Vec::new();

    let mut global_step = 0u64;
    let mut updates = 0u64;
    let mut episode = 0u64;
    let (mut ep_return, mut ep_bonus, mut ep_len) = (0.0, 0.0, 0u64);
    let mut obs = env.reset(&mut env_rng);
    let mut features = env.features(&obs);

    if ppo.total_steps > 0 && ppo.eval_episodes > 0 {
        let results = evaluate_greedy(&nets, &spec.env, ppo.eval_episodes, &mut eval_rng)?;
        eval_records(&results, RecordKind::Eval, spec.seed, 0, bonuses.counts(), observer);
    }

    while global_step < ppo.total_steps {
        let len = (ppo.total_steps - global_step).min(ppo.rollout_length as u64) as usize;
        optim.set_learning_rate(ppo.learning_rate_at(global_step));
        buffer.clear();
        buffer.capacity = len;
        transitions.clear();
        for _ in 0..len {
            let (action, log_prob, value) = actor.act(&nets, &features, &mut act_rng)?;
            let step = env.step(action, &mut env_rng)?;
            let next_features = env.features(&step.observation);
            let t = Transition {
                state: features,
                action,
                extrinsic_reward: step.extrinsic_reward,
                next_state: next_features,
                done: step.done,
            };
            let r_e = step.extrinsic_reward;
            let r_c = bonuses.combined(r_e, &t, &obs, &step.observation, global_step)?;
            observer.on_step(&StepLog {
                global_step,
                extrinsic: r_e,
                combined: r_c,
            });
            let cut_value = if ppo.bootstrap_timeouts && step.outcome == Outcome::Timeout {
                actor.value(&nets, &t.next_state)?
            } else {
                0.0
            };
            buffer.push(&t.state, action, log_prob, value, r_c, step.done, cut_value)?;
            global_step += 1;
            ep_return += r_e;
            ep_bonus += r_c - r_e;
            ep_len += 1;
            if step.done {
                let counts = bonuses.counts();
                observer.on_record(&EpisodeRecord {
                    kind: RecordKind::Train,
                    seed: spec.seed,
                    global_step,
                    episode,
                    extrinsic_return: ep_return,
                    normalized_return: normalize_return(env.kind(), ep_return),
                    success: step.outcome == Outcome::Goal,
                    length: ep_len,
                    mean_intrinsic: ep_bonus / ep_len as f64,
                    rater_hits: counts.0,
                    rater_misses: counts.1,
                });
                episode += 1;
                (ep_return, ep_bonus, ep_len) = (0.0, 0.0, 0);
                obs = env.reset(&mut env_rng);
                features = env.features(&obs);
            } else {
                obs = step.observation;
                features = t.next_state.clone();
            }
            if bonuses.needs_transitions() {
                transitions.push(t);
            }
        }
        let bootstrap = actor.value(&nets, &features)?;
        let (advantages, returns) = compute_gae(&buffer, ppo.gamma, ppo.gae_lambda, bootstrap);
        let stats = ppo_update(&mut nets, &buffer, &advantages, &returns, ppo, &mut optim, &mut shuffle_rng)?;
        bonuses.update(&transitions, ppo.minibatch_size, &mut shuffle_rng)?;
        updates += 1;
        log::debug!(
            "seed {} step {global_step}: surrogate {:.4} value {:.4} entropy {:.4} clip {:.3}",
            spec.seed,
            stats.surrogate,
            stats.value_loss,
            stats.entropy,
            stats.clip_fraction
        );
        if ppo.eval_episodes > 0 && global_step < ppo.total_steps {
            let results = evaluate_greedy(&nets, &spec.env, ppo.eval_episodes, &mut eval_rng)?;
            eval_records(&results, RecordKind::Eval, spec.seed, global_step, bonuses.counts(), observer);
        }
    }

    let (mut final_return, mut final_success) = (0.0, 0.0);
    if ppo.total_steps > 0 && ppo.final_eval_episodes > 0 {
        let results = evaluate_greedy(&nets, &spec.env, ppo.final_eval_episodes, &mut eval_rng)?;
        let n = results.len() as f64;
        final_return = results.iter().map(|r| r.normalized_return).sum::<f64>() / n;
        final_success = results.iter().filter(|r| r.success).count() as f64 / n;
        eval_records(&results, RecordKind::Final, spec.seed, global_step, bonuses.counts(), observer);
    }

    let (backend_calls, fallbacks, retries) = bonuses
        .rater
        .as_ref()
        .map_or((0, 0, 0), |r| (r.backend_calls(), r.fallbacks(), r.retries()));
    Ok(TrainOutcome {
        nets,
        dictionary: bonuses.rater.map(Rater::into_dictionary),
        backend_calls,
        fallbacks,
        retries,
        updates,
        global_steps: global_step,
        train_episodes: episode,
        final_normalized_return: final_return,
        final_success_rate: final_success,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{DeepSeaConfig, SeqChainConfig};
    use crate::numerics::{Activation, Mlp};
    use crate::rater::OracleBackend;

    fn zero_head_nets(actions: usize) -> PolicyValueNets {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut nets = PolicyValueNets::new(3, actions, &[8], &mut rng).unwrap();
        nets.policy.scale_output_layer(0.0);
        nets
    }

    #[test]
    fn zero_head_is_uniform() {
        let nets = zero_head_nets(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, log_prob, _) = act(&nets, &[0.3, -0.2, 0.9], &mut rng).unwrap();
        assert!((log_prob - 0.25f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn confident_logits_pick_their_action() {
        let policy = Mlp::from_flat(&[1, 2], vec![0.0, 0.0, 50.0, -50.0], Activation::Tanh, Activation::Identity).unwrap();
        let value = Mlp::zeros(&[1, 1], Activation::Tanh, Activation::Identity).unwrap();
        let nets = PolicyValueNets::from_nets(policy, value).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut actor = Actor::new(&nets);
        let zeros = (0..10_000).filter(|_| actor.act(&nets, &[0.0], &mut rng).unwrap().0 == 0).count();
        assert!(zeros as f64 / 1e4 > 0.999);
    }

    #[test]
    fn acting_is_seed_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nets = PolicyValueNets::new(3, 5, &[16, 16], &mut rng).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..200).map(|_| act(&nets, &[0.1, 0.2, 0.3], &mut rng).unwrap().0).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn non_finite_logits_are_rejected() {
        let policy = Mlp::from_flat(&[1, 2], vec![1.0, 1.0, 0.0, 0.0], Activation::Tanh, Activation::Identity).unwrap();
        let value = Mlp::zeros(&[1, 1], Activation::Tanh, Activation::Identity).unwrap();
        let nets = PolicyValueNets::from_nets(policy, value).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(act(&nets, &[f64::INFINITY], &mut rng).is_err());
    }

    #[test]
    fn argmax_ties_are_fair_and_never_pick_a_lower_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!((0..100).all(|_| argmax_random_tie(&[0.1, 0.9], &mut rng) == 1));
        let ones = (0..10_000).filter(|_| argmax_random_tie(&[0.5, 0.5], &mut rng) == 1).count();
        assert!((ones as f64 / 1e4 - 0.5).abs() < 0.02, "{ones}");
        for _ in 0..1000 {
            let s: Vec<f64> = (0..5).map(|_| (rng.random::<f64>() * 3.0).floor()).collect();
            let a = argmax_random_tie(&s, &mut rng);
            assert!(s.iter().all(|&x| x <= s[a]));
        }
    }

    #[test]
    fn perfect_oracle_solves_seqchain_in_seven_steps() {
        let cfg = EnvConfig::SeqChain(SeqChainConfig::new(7));
        let mut env = cfg.build().unwrap();
        let mut rater = Rater::new(
            Box::new(OracleBackend::new(env.kind())),
            RatingDictionary::new(0, cfg.action_names()),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = run_direct_episode(&mut env, &mut rater, &mut rng).unwrap();
        assert!(r.success);
        assert_eq!(r.length, 7);
    }

    #[test]
    fn zero_budget_trains_nothing() {
        let spec = TrainSpec {
            env: EnvConfig::DeepSea(DeepSeaConfig { size: 4 }),
            intrinsic: IntrinsicConfig::default(),
            rater: RaterConfig::default(),
            ppo: PpoConfig {
                total_steps: 0,
                ..PpoConfig::default()
            },
            seed: 0,
            dictionary: None,
        };
        let mut records = Vec::new();
        let out = train(&spec, &mut records).unwrap();
        assert!(records.is_empty());
        assert_eq!(out.updates, 0);
        let mut rng = stream_rng(0, Stream::Init);
        let fresh = PolicyValueNets::new(8, 2, &[64, 64], &mut rng).unwrap();
        assert_eq!(out.nets, fresh);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.bin");
        save_checkpoint(&out.nets, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), out.nets);
    }
}
