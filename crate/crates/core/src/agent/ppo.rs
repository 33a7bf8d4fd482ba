//! Clipped-surrogate PPO over a categorical policy with a separate value network.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{adam_step, Activation, AdamConfig, AdamState, Mlp, Workspace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    /// Linearly anneal the learning rate towards zero over `total_steps`.
    pub anneal_lr: bool,
    pub rollout_length: usize,
    pub total_steps: u64,
    pub hidden: Vec<usize>,
    /// Global gradient-norm cap applied to each minibatch step; 0 disables it.
    pub max_grad_norm: f64,
    /// Bootstrap with V(s') when an episode ends by timeout. Off, a timeout
    /// is treated like any other terminal.
    pub bootstrap_timeouts: bool,
    /// Greedy evaluation episodes after every update.
    pub eval_episodes: usize,
    /// Greedy evaluation episodes at the end of training.
    pub final_eval_episodes: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            epochs: 4,
            minibatch_size: 64,
            entropy_coef: 0.01,
            value_coef: 0.5,
            learning_rate: 1e-4,
            anneal_lr: true,
            rollout_length: 2048,
            total_steps: 200_000,
            hidden: vec![64, 64],
            max_grad_norm: 0.5,
            bootstrap_timeouts: false,
            eval_episodes: 10,
            final_eval_episodes: 100,
        }
    }
}

impl PpoConfig {
    /// Learning rate for an update whose rollout starts at `global_step`.
    pub fn learning_rate_at(&self, global_step: u64) -> f64 {
        if self.anneal_lr && self.total_steps > 0 {
            self.learning_rate * (1.0 - global_step as f64 / self.total_steps as f64).max(0.0)
        } else {
            self.learning_rate
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("gamma", self.gamma)?;
        unit("gae_lambda", self.gae_lambda)?;
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(Error::Config(format!("clip_epsilon must lie in (0, 1), got {}", self.clip_epsilon)));
        }
        if self.epochs == 0 || self.minibatch_size == 0 || self.rollout_length == 0 {
            return Err(Error::Config("epochs, minibatch_size and rollout_length must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || self.entropy_coef < 0.0 || self.value_coef < 0.0 || self.max_grad_norm < 0.0 {
            return Err(Error::Config("learning rate must be positive and coefficients non-negative".into()));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        Ok(())
    }
}

/// Policy logits and state value from two separate tanh networks.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValueNets {
    pub policy: Mlp,
    pub value: Mlp,
}

impl PolicyValueNets {
    /// Xavier init; the policy head is scaled by 0.01 so the initial policy is
    /// close to uniform.
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, actions: usize, hidden: &[usize], rng: &mut R) -> Result<Self> {
        let sizes = |out: usize| {
            let mut s = vec![obs_dim];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        let mut policy = Mlp::xavier(&sizes(actions), Activation::Tanh, rng)?;
        policy.scale_output_layer(0.01);
        let value = Mlp::xavier(&sizes(1), Activation::Tanh, rng)?;
        Self::from_nets(policy, value)
    }

    pub fn from_nets(policy: Mlp, value: Mlp) -> Result<Self> {
        if policy.input_dim() != value.input_dim() || value.output_dim() != 1 {
            return Err(Error::Dimension(format!(
                "policy {:?} and value {:?} do not fit together",
                policy.layer_sizes(),
                value.layer_sizes()
            )));
        }
        Ok(Self { policy, value })
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.input_dim()
    }

    pub fn action_count(&self) -> usize {
        self.policy.output_dim()
    }
}

/// Trajectory storage for one rollout. `dones[t]` marks the last step of an
/// episode; `cut_values[t]` holds `V(s_{t+1})` when that episode was cut by a
/// time limit and 0 otherwise.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub obs_dim: usize,
    pub capacity: usize,
    pub observations: Vec<f64>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub cut_values: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(obs_dim: usize, capacity: usize) -> Self {
        Self {
            obs_dim,
            capacity,
            observations: Vec::with_capacity(obs_dim * capacity),
            actions: Vec::with_capacity(capacity),
            log_probs: Vec::with_capacity(capacity),
            values: Vec::with_capacity(capacity),
            rewards: Vec::with_capacity(capacity),
            dones: Vec::with_capacity(capacity),
            cut_values: Vec::with_capacity(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() >= self.capacity
    }

    pub fn clear(&mut self) {
        self.observations.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.values.clear();
        self.rewards.clear();
        self.dones.clear();
        self.cut_values.clear();
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        observation: &[f64],
        action: usize,
        log_prob: f64,
        value: f64,
        reward: f64,
        done: bool,
        cut_value: f64,
    ) -> Result<()> {
        if self.is_full() {
            return Err(Error::Usage(format!("rollout buffer full at {}", self.capacity)));
        }
        if observation.len() != self.obs_dim {
            return Err(Error::Dimension(format!(
                "observation has {} entries, buffer stores {}",
                observation.len(),
                self.obs_dim
            )));
        }
        self.observations.extend_from_slice(observation);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.values.push(value);
        self.rewards.push(reward);
        self.dones.push(done);
        self.cut_values.push(cut_value);
        Ok(())
    }

    pub fn observation(&self, t: usize) -> &[f64] {
        &self.observations[t * self.obs_dim..(t + 1) * self.obs_dim]
    }
}

/// Backward GAE recursion. `bootstrap_value` is `V` of the state after the
/// last stored step and is ignored when that step ended an episode.
/// Returns `(advantages, returns)`.
pub fn compute_gae(buffer: &RolloutBuffer, gamma: f64, gae_lambda: f64, bootstrap_value: f64) -> (Vec<f64>, Vec<f64>) {
    let n = buffer.len();
    let mut advantages = vec![0.0; n];
    let mut next_advantage = 0.0;
    for t in (0..n).rev() {
        let next_value = if buffer.dones[t] {
            buffer.cut_values[t]
        } else if t + 1 < n {
            buffer.values[t + 1]
        } else {
            bootstrap_value
        };
        let carry = if buffer.dones[t] { 0.0 } else { next_advantage };
        let delta = buffer.rewards[t] + gamma * next_value - buffer.values[t];
        advantages[t] = delta + gamma * gae_lambda * carry;
        next_advantage = advantages[t];
    }
    let returns = advantages.iter().zip(&buffer.values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

/// Shifts and scales to mean 0 and (population) std 1. Constant inputs are
/// only centred.
pub fn normalize_advantages(advantages: &mut [f64]) {
    if advantages.is_empty() {
        return;
    }
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    advantages.iter_mut().for_each(|a| *a -= mean);
    let std = (advantages.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
    if std > 1e-12 {
        advantages.iter_mut().for_each(|a| *a /= std);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    /// Mean clipped surrogate objective (before negation).
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizerStates {
    pub policy: AdamState,
    pub value: AdamState,
}

impl OptimizerStates {
    pub fn set_learning_rate(&mut self, lr: f64) {
        self.policy.config.learning_rate = lr;
        self.value.config.learning_rate = lr;
    }

    pub fn new(nets: &PolicyValueNets, learning_rate: f64) -> Self {
        let cfg = AdamConfig {
            learning_rate,
            ..AdamConfig::default()
        };
        Self {
            policy: AdamState::new(nets.policy.param_count(), cfg),
            value: AdamState::new(nets.value.param_count(), cfg),
        }
    }
}

/// Reusable buffers for minibatch gradients.
pub struct PpoScratch {
    policy_ws: Workspace,
    value_ws: Workspace,
    pub policy_grads: Vec<f64>,
    pub value_grads: Vec<f64>,
    logit_grad: Vec<f64>,
    probs: Vec<f64>,
}

impl PpoScratch {
    pub fn new(nets: &PolicyValueNets) -> Self {
        Self {
            policy_ws: nets.policy.workspace(),
            value_ws: nets.value.workspace(),
            policy_grads: vec![0.0; nets.policy.param_count()],
            value_grads: vec![0.0; nets.value.param_count()],
            logit_grad: vec![0.0; nets.action_count()],
            probs: vec![0.0; nets.action_count()],
        }
    }
}

fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Loss statistics for `indices` and the gradients of
/// `-surrogate + value_coef·(V - R)² - entropy_coef·H`, averaged over the
/// minibatch, left in `scratch`.
pub fn minibatch_gradients(
    nets: &PolicyValueNets,
    buffer: &RolloutBuffer,
    advantages: &[f64],
    returns: &[f64],
    indices: &[usize],
    cfg: &PpoConfig,
    scratch: &mut PpoScratch,
) -> Result<UpdateStats> {
    scratch.policy_grads.iter_mut().for_each(|g| *g = 0.0);
    scratch.value_grads.iter_mut().for_each(|g| *g = 0.0);
    let scale = 1.0 / indices.len() as f64;
    let eps = cfg.clip_epsilon;
    let mut stats = UpdateStats::default();
    for &t in indices {
        let obs = buffer.observation(t);
        let action = buffer.actions[t];
        let adv = advantages[t];

        let logits = nets.policy.forward_into(obs, &mut scratch.policy_ws)?;
        if logits.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("policy logits".into()));
        }
        softmax_into(logits, &mut scratch.probs);
        let probs = &scratch.probs;
        let log_p = probs[action].max(f64::MIN_POSITIVE).ln();
        let ratio = (log_p - buffer.log_probs[t]).exp();
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
        let surrogate = (ratio * adv).min(clipped * adv);
        let entropy: f64 = -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>();
        stats.surrogate += scale * surrogate;
        stats.entropy += scale * entropy;
        stats.approx_kl += scale * (buffer.log_probs[t] - log_p);
        if (ratio - 1.0).abs() > eps {
            stats.clip_fraction += scale;
        }
        // The unclipped branch is active unless the ratio has left the trust
        // region in the direction the advantage pushes it.
        let unclipped = (adv >= 0.0 && ratio <= 1.0 + eps) || (adv < 0.0 && ratio >= 1.0 - eps);
        let pg = if unclipped { -adv * ratio } else { 0.0 };
        for (j, g) in scratch.logit_grad.iter_mut().enumerate() {
            let p = probs[j];
            let onehot = if j == action { 1.0 } else { 0.0 };
            let log_pj = if p > 0.0 { p.ln() } else { 0.0 };
            *g = scale * (pg * (onehot - p) + cfg.entropy_coef * p * (log_pj + entropy));
        }
        nets.policy
            .backward_into(&mut scratch.policy_ws, &scratch.logit_grad, &mut scratch.policy_grads, None)?;

        let v = nets.value.forward_into(obs, &mut scratch.value_ws)?[0];
        let err = v - returns[t];
        stats.value_loss += scale * err * err;
        nets.value.backward_into(
            &mut scratch.value_ws,
            &[scale * 2.0 * cfg.value_coef * err],
            &mut scratch.value_grads,
            None,
        )?;
    }
    let loss = -stats.surrogate + cfg.value_coef * stats.value_loss - cfg.entropy_coef * stats.entropy;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("ppo loss {loss}")));
    }
    Ok(stats)
}

fn clip_global_norm(a: &mut [f64], b: &mut [f64], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = a.iter().chain(b.iter()).map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        a.iter_mut().chain(b.iter_mut()).for_each(|g| *g *= s);
    }
}

/// `epochs` passes of shuffled minibatches over a full buffer. Advantages are
/// normalized here. On a non-finite loss the networks and optimizer states are
/// restored to their values before the call and the error is returned.
pub fn ppo_update<R: Rng + ?Sized>(
    nets: &mut PolicyValueNets,
    buffer: &RolloutBuffer,
    advantages: &[f64],
    returns: &[f64],
    cfg: &PpoConfig,
    optim: &mut OptimizerStates,
    rng: &mut R,
) -> Result<UpdateStats> {
    if buffer.is_empty() {
        return Err(Error::Usage("ppo update on an empty buffer".into()));
    }
    let mut adv = advantages.to_vec();
    normalize_advantages(&mut adv);
    let backup = (nets.clone(), optim.clone());
    let mut scratch = PpoScratch::new(nets);
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    let mut total = UpdateStats::default();
    let mut batches = 0usize;
    let result: Result<()> = (|| {
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(cfg.minibatch_size) {
                let s = minibatch_gradients(nets, buffer, &adv, returns, chunk, cfg, &mut scratch)?;
                clip_global_norm(&mut scratch.policy_grads, &mut scratch.value_grads, cfg.max_grad_norm);
                adam_step(nets.policy.params_mut(), &scratch.policy_grads, &mut optim.policy)?;
                adam_step(nets.value.params_mut(), &scratch.value_grads, &mut optim.value)?;
                total.surrogate += s.surrogate;
                total.value_loss += s.value_loss;
                total.entropy += s.entropy;
                total.clip_fraction += s.clip_fraction;
                total.approx_kl += s.approx_kl;
                batches += 1;
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        log::warn!("ppo update aborted, parameters restored: {e}");
        *nets = backup.0;
        *optim = backup.1;
        return Err(e);
    }
    let k = 1.0 / batches as f64;
    Ok(UpdateStats {
        surrogate: total.surrogate * k,
        value_loss: total.value_loss * k,
        entropy: total.entropy * k,
        clip_fraction: total.clip_fraction * k,
        approx_kl: total.approx_kl * k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn buffer_from(rewards: &[f64], values: &[f64], dones: &[bool]) -> RolloutBuffer {
        let mut b = RolloutBuffer::new(1, rewards.len());
        for t in 0..rewards.len() {
            b.push(&[0.0], 0, 0.0, values[t], rewards[t], dones[t], 0.0).unwrap();
        }
        b
    }

    #[test]
    fn single_terminal_step() {
        let b = buffer_from(&[1.0], &[0.0], &[true]);
        let (adv, ret) = compute_gae(&b, 0.99, 0.95, 123.0);
        assert_eq!((adv[0], ret[0]), (1.0, 1.0));
    }

    #[test]
    fn zero_gamma_is_one_step_td() {
        let b = buffer_from(&[0.5, -1.0, 2.0], &[0.1, 0.2, 0.3], &[false, true, false]);
        let (adv, _) = compute_gae(&b, 0.0, 0.95, 9.0);
        for t in 0..3 {
            assert_eq!(adv[t], b.rewards[t] - b.values[t]);
        }
    }

    #[test]
    fn time_limit_bootstraps_true_terminal_does_not() {
        let mut b = RolloutBuffer::new(1, 2);
        b.push(&[0.0], 0, 0.0, 0.0, 0.0, true, 2.0).unwrap();
        b.push(&[0.0], 0, 0.0, 0.0, 0.0, true, 0.0).unwrap();
        let (adv, _) = compute_gae(&b, 0.5, 1.0, 0.0);
        assert_eq!(adv, vec![1.0, 0.0]);
    }

    #[test]
    fn normalization_hits_unit_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a: Vec<f64> = (0..500).map(|_| rng.random::<f64>() * 30.0 - 4.0).collect();
        normalize_advantages(&mut a);
        let mean = a.iter().sum::<f64>() / 500.0;
        let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 500.0).sqrt();
        assert!(mean.abs() < 1e-9 && (std - 1.0).abs() < 1e-9);
        let mut flat = vec![3.0; 4];
        normalize_advantages(&mut flat);
        assert_eq!(flat, vec![0.0; 4]);
    }

    #[test]
    fn push_checks_capacity_and_width() {
        let mut b = RolloutBuffer::new(2, 1);
        assert!(b.push(&[0.0], 0, 0.0, 0.0, 0.0, false, 0.0).is_err());
        b.push(&[0.0, 1.0], 0, 0.0, 0.0, 0.0, false, 0.0).unwrap();
        assert!(b.is_full());
        assert!(b.push(&[0.0, 1.0], 0, 0.0, 0.0, 0.0, false, 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(PpoConfig::default().validate().is_ok());
        let bad = PpoConfig {
            clip_epsilon: 1.0,
            ..PpoConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PpoConfig {
            gamma: 1.5,
            ..PpoConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
