//! Curiosity from forward-model prediction error in a learned feature space.
//!
//! Three networks share the feature encoder φ:
//!
//! - forward model: `φ(s) ⊕ onehot(a) → φ̂(s')`
//! - inverse model: `φ(s) ⊕ φ(s') → logits(a)`
//!
//! Training minimises `(1-β)·CE(inverse) + β·½‖φ̂(s') - φ(s')‖²` averaged
//! over the batch; gradients flow into the encoder from both terms and both
//! encoder inputs. With [`IcmFeatures::Raw`] the encoder is the identity and
//! only the forward model is trained.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Transition;
use crate::error::{Error, Result};
use crate::numerics::{adam_step, softmax, Activation, AdamConfig, AdamState, Mlp, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcmFeatures {
    Learned,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IcmConfig {
    pub beta: f64,
    pub alpha: f64,
    pub feature_dim: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub features: IcmFeatures,
}

impl Default for IcmConfig {
    fn default() -> Self {
        Self {
            beta: 0.2,
            alpha: 1.0,
            feature_dim: 32,
            hidden: 64,
            learning_rate: 1e-3,
            features: IcmFeatures::Learned,
        }
    }
}

impl IcmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("icm beta must be in [0, 1], got {}", self.beta)));
        }
        if !(self.alpha >= 0.0) || self.feature_dim == 0 || self.hidden == 0 {
            return Err(Error::Config("icm alpha must be >= 0 and sizes positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcmLosses {
    pub inverse: f64,
    pub forward: f64,
}

impl IcmLosses {
    pub fn total(&self, beta: f64) -> f64 {
        (1.0 - beta) * self.inverse + beta * self.forward
    }
}

/// Parameter gradients in each network's flat layout.
#[derive(Debug, Clone, PartialEq)]
pub struct IcmGradients {
    pub encoder: Vec<f64>,
    pub forward_model: Vec<f64>,
    pub inverse_model: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct IcmNets {
    pub encoder: Option<Mlp>,
    pub forward_model: Mlp,
    pub inverse_model: Option<Mlp>,
    pub alpha: f64,
    action_count: usize,
    adam_encoder: Option<AdamState>,
    adam_forward: AdamState,
    adam_inverse: Option<AdamState>,
}

struct Scratch {
    enc_s: Option<Workspace>,
    enc_n: Option<Workspace>,
    fwd: Workspace,
    inv: Option<Workspace>,
}

impl IcmNets {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        action_count: usize,
        config: &IcmConfig,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let h = config.hidden;
        let (encoder, inverse, feature_dim) = match config.features {
            IcmFeatures::Learned => {
                let f = config.feature_dim;
                let enc = Mlp::xavier(&[obs_dim, h, f], Activation::Tanh, rng)?;
                let inv = Mlp::xavier(&[2 * f, h, action_count], Activation::Tanh, rng)?;
                (Some(enc), Some(inv), f)
            }
            IcmFeatures::Raw => (None, None, obs_dim),
        };
        let forward = Mlp::xavier(&[feature_dim + action_count, h, feature_dim], Activation::Tanh, rng)?;
        Self::from_parts(encoder, forward, inverse, config.alpha, action_count, config.learning_rate)
    }

    pub fn from_parts(
        encoder: Option<Mlp>,
        forward_model: Mlp,
        inverse_model: Option<Mlp>,
        alpha: f64,
        action_count: usize,
        learning_rate: f64,
    ) -> Result<Self> {
        let feature_dim = forward_model.output_dim();
        if forward_model.input_dim() != feature_dim + action_count {
            return Err(Error::Dimension(format!(
                "forward model takes {} inputs, expected {} features + {} actions",
                forward_model.input_dim(),
                feature_dim,
                action_count
            )));
        }
        if let Some(enc) = &encoder {
            if enc.output_dim() != feature_dim {
                return Err(Error::Dimension(format!(
                    "encoder emits {} features, forward model predicts {feature_dim}",
                    enc.output_dim()
                )));
            }
        }
        if let Some(inv) = &inverse_model {
            if inv.input_dim() != 2 * feature_dim || inv.output_dim() != action_count {
                return Err(Error::Dimension(format!(
                    "inverse model shape {:?} does not match {feature_dim} features / {action_count} actions",
                    inv.layer_sizes()
                )));
            }
        }
        let adam = |n: usize| {
            AdamState::new(
                n,
                AdamConfig {
                    learning_rate,
                    ..AdamConfig::default()
                },
            )
        };
        Ok(Self {
            adam_encoder: encoder.as_ref().map(|e| adam(e.param_count())),
            adam_forward: adam(forward_model.param_count()),
            adam_inverse: inverse_model.as_ref().map(|i| adam(i.param_count())),
            encoder,
            forward_model,
            inverse_model,
            alpha,
            action_count,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.forward_model.output_dim()
    }

    pub fn features(&self, state: &[f64]) -> Result<Vec<f64>> {
        match &self.encoder {
            Some(enc) => enc.forward(state),
            None => {
                if state.len() != self.feature_dim() {
                    return Err(Error::Dimension(format!(
                        "raw icm features expect {} entries, got {}",
                        self.feature_dim(),
                        state.len()
                    )));
                }
                Ok(state.to_vec())
            }
        }
    }

    fn forward_input(&self, phi: &[f64], action: usize) -> Result<Vec<f64>> {
        if action >= self.action_count {
            return Err(Error::Dimension(format!(
                "action {action} outside {} actions",
                self.action_count
            )));
        }
        let mut input = Vec::with_capacity(phi.len() + self.action_count);
        input.extend_from_slice(phi);
        input.extend((0..self.action_count).map(|a| if a == action { 1.0 } else { 0.0 }));
        Ok(input)
    }

    /// `α·‖φ̂(s') - φ(s')‖²`; no parameter change.
    pub fn bonus(&self, t: &Transition) -> Result<f64> {
        let phi = self.features(&t.state)?;
        let target = self.features(&t.next_state)?;
        let predicted = self.forward_model.forward(&self.forward_input(&phi, t.action)?)?;
        let err: f64 = predicted.iter().zip(&target).map(|(p, q)| (p - q) * (p - q)).sum();
        Ok(self.alpha * err)
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            enc_s: self.encoder.as_ref().map(Mlp::workspace),
            enc_n: self.encoder.as_ref().map(Mlp::workspace),
            fwd: self.forward_model.workspace(),
            inv: self.inverse_model.as_ref().map(Mlp::workspace),
        }
    }

    fn run(&self, batch: &[Transition], beta: f64, mut grads: Option<&mut IcmGradients>) -> Result<IcmLosses> {
        if batch.is_empty() {
            return Err(Error::Usage("icm update on an empty batch".into()));
        }
        let scale = 1.0 / batch.len() as f64;
        let f = self.feature_dim();
        let mut ws = self.scratch();
        let mut losses = IcmLosses {
            inverse: 0.0,
            forward: 0.0,
        };
        let mut fwd_in_grad = vec![0.0; f + self.action_count];
        let mut inv_in_grad = vec![0.0; 2 * f];
        for t in batch {
            let (phi_s, phi_n) = match (&self.encoder, &mut ws.enc_s, &mut ws.enc_n) {
                (Some(enc), Some(a), Some(b)) => (
                    enc.forward_into(&t.state, a)?.to_vec(),
                    enc.forward_into(&t.next_state, b)?.to_vec(),
                ),
                _ => (self.features(&t.state)?, self.features(&t.next_state)?),
            };
            let fwd_input = self.forward_input(&phi_s, t.action)?;
            let predicted = self.forward_model.forward_into(&fwd_input, &mut ws.fwd)?;
            let diff: Vec<f64> = predicted.iter().zip(&phi_n).map(|(p, q)| p - q).collect();
            losses.forward += scale * 0.5 * diff.iter().map(|d| d * d).sum::<f64>();

            let mut inv_out_grad = None;
            if let (Some(inv), Some(inv_ws)) = (&self.inverse_model, &mut ws.inv) {
                let mut inv_input = phi_s.clone();
                inv_input.extend_from_slice(&phi_n);
                let logits = inv.forward_into(&inv_input, inv_ws)?;
                let probs = softmax(logits)?;
                losses.inverse -= scale * probs[t.action].ln();
                let mut g = probs;
                g[t.action] -= 1.0;
                g.iter_mut().for_each(|v| *v *= (1.0 - beta) * scale);
                inv_out_grad = Some(g);
            }

            let Some(grads) = grads.as_deref_mut() else {
                continue;
            };
            let fwd_out_grad: Vec<f64> = diff.iter().map(|d| beta * scale * d).collect();
            self.forward_model.backward_into(
                &mut ws.fwd,
                &fwd_out_grad,
                &mut grads.forward_model,
                Some(&mut fwd_in_grad),
            )?;
            let mut d_phi_s = fwd_in_grad[..f].to_vec();
            let mut d_phi_n: Vec<f64> = fwd_out_grad.iter().map(|g| -g).collect();
            if let (Some(inv), Some(inv_ws), Some(g)) = (&self.inverse_model, &mut ws.inv, &inv_out_grad) {
                inv.backward_into(inv_ws, g, &mut grads.inverse_model, Some(&mut inv_in_grad))?;
                for k in 0..f {
                    d_phi_s[k] += inv_in_grad[k];
                    d_phi_n[k] += inv_in_grad[f + k];
                }
            }
            if let (Some(enc), Some(a), Some(b)) = (&self.encoder, &mut ws.enc_s, &mut ws.enc_n) {
                enc.backward_into(a, &d_phi_s, &mut grads.encoder, None)?;
                enc.backward_into(b, &d_phi_n, &mut grads.encoder, None)?;
            }
        }
        Ok(losses)
    }

    pub fn losses(&self, batch: &[Transition], beta: f64) -> Result<IcmLosses> {
        self.run(batch, beta, None)
    }

    /// Losses and exact gradients of `(1-β)·inverse + β·forward`.
    pub fn gradients(&self, batch: &[Transition], beta: f64) -> Result<(IcmLosses, IcmGradients)> {
        let mut grads = IcmGradients {
            encoder: vec![0.0; self.encoder.as_ref().map_or(0, Mlp::param_count)],
            forward_model: vec![0.0; self.forward_model.param_count()],
            inverse_model: vec![0.0; self.inverse_model.as_ref().map_or(0, Mlp::param_count)],
        };
        let losses = self.run(batch, beta, Some(&mut grads))?;
        Ok((losses, grads))
    }

    /// One Adam step on the combined loss. Returns the pre-step losses.
    /// A non-finite loss skips the step.
    pub fn update(&mut self, batch: &[Transition], beta: f64) -> Result<IcmLosses> {
        let (losses, grads) = self.gradients(batch, beta)?;
        if !losses.total(beta).is_finite() {
            return Err(Error::NonFinite(format!("icm loss {losses:?}")));
        }
        if let (Some(enc), Some(adam)) = (&mut self.encoder, &mut self.adam_encoder) {
            adam_step(enc.params_mut(), &grads.encoder, adam)?;
        }
        if beta > 0.0 {
            adam_step(self.forward_model.params_mut(), &grads.forward_model, &mut self.adam_forward)?;
        }
        if beta < 1.0 {
            if let (Some(inv), Some(adam)) = (&mut self.inverse_model, &mut self.adam_inverse) {
                adam_step(inv.params_mut(), &grads.inverse_model, adam)?;
            }
        }
        Ok(losses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transitions(rng: &mut ChaCha8Rng, n: usize, obs_dim: usize, actions: usize) -> Vec<Transition> {
        (0..n)
            .map(|i| {
                let state: Vec<f64> = (0..obs_dim).map(|_| rng.random::<f64>()).collect();
                let action = i % actions;
                let next_state = state
                    .iter()
                    .enumerate()
                    .map(|(k, v)| if k == action { v + 0.5 } else { *v })
                    .collect();
                Transition {
                    state,
                    action,
                    extrinsic_reward: 0.0,
                    next_state,
                    done: false,
                }
            })
            .collect()
    }

    #[test]
    fn closed_form_bonus() {
        // forward model outputs [1, 0], identity encoder target [0, 0]
        let mut fwd = Mlp::zeros(&[3, 2], Activation::Tanh, Activation::Identity).unwrap();
        fwd.biases_mut(0).copy_from_slice(&[1.0, 0.0]);
        let nets = IcmNets::from_parts(None, fwd, None, 1.0, 1, 1e-3).unwrap();
        let t = Transition {
            state: vec![0.3, 0.4],
            action: 0,
            extrinsic_reward: 0.0,
            next_state: vec![0.0, 0.0],
            done: false,
        };
        assert_eq!(nets.bonus(&t).unwrap(), 1.0);
        let silent = IcmNets { alpha: 0.0, ..nets.clone() };
        assert_eq!(silent.bonus(&t).unwrap(), 0.0);
    }

    #[test]
    fn perfect_forward_model_gives_zero_bonus() {
        // zero forward model predicts 0 features; raw features of s' are 0
        let fwd = Mlp::zeros(&[4, 2], Activation::Tanh, Activation::Identity).unwrap();
        let nets = IcmNets::from_parts(None, fwd, None, 1.0, 2, 1e-3).unwrap();
        let t = Transition {
            state: vec![0.7, -0.1],
            action: 1,
            extrinsic_reward: 0.0,
            next_state: vec![0.0, 0.0],
            done: false,
        };
        assert_eq!(nets.bonus(&t).unwrap(), 0.0);
    }

    #[test]
    fn beta_one_freezes_inverse_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut nets = IcmNets::new(5, 3, &IcmConfig::default(), &mut rng).unwrap();
        let batch = transitions(&mut rng, 16, 5, 3);
        let before = nets.inverse_model.as_ref().unwrap().checksum();
        for _ in 0..5 {
            nets.update(&batch, 1.0).unwrap();
        }
        assert_eq!(nets.inverse_model.as_ref().unwrap().checksum(), before);
    }

    #[test]
    fn forward_loss_drops_tenfold_on_fixed_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut nets = IcmNets::new(4, 2, &IcmConfig::default(), &mut rng).unwrap();
        let batch = transitions(&mut rng, 32, 4, 2);
        let initial = nets.losses(&batch, 0.2).unwrap().forward;
        for _ in 0..500 {
            nets.update(&batch, 0.2).unwrap();
        }
        let after = nets.losses(&batch, 0.2).unwrap().forward;
        assert!(after * 10.0 <= initial, "forward loss {initial} -> {after}");
    }

    #[test]
    fn empty_batch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut nets = IcmNets::new(3, 2, &IcmConfig::default(), &mut rng).unwrap();
        assert!(nets.update(&[], 0.2).is_err());
    }
}
