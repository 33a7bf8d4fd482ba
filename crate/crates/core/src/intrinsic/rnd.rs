//! Novelty from a trained predictor's error against a frozen random target.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{adam_step, Activation, AdamConfig, AdamState, Mlp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RndConfig {
    pub feature_dim: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    /// Divide bonuses by the running standard deviation of raw bonuses.
    pub normalize: bool,
}

impl Default for RndConfig {
    fn default() -> Self {
        Self {
            feature_dim: 32,
            hidden: 64,
            learning_rate: 1e-3,
            normalize: true,
        }
    }
}

impl RndConfig {
    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 || self.hidden == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::Config("rnd sizes and learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RndNets {
    target: Mlp,
    pub predictor: Mlp,
    adam: AdamState,
}

impl RndNets {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, config: &RndConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let sizes = [obs_dim, config.hidden, config.feature_dim];
        let target = Mlp::xavier(&sizes, Activation::Tanh, rng)?;
        let predictor = Mlp::xavier(&sizes, Activation::Tanh, rng)?;
        Self::from_nets(target, predictor, config.learning_rate)
    }

    pub fn from_nets(target: Mlp, predictor: Mlp, learning_rate: f64) -> Result<Self> {
        if target.input_dim() != predictor.input_dim() || target.output_dim() != predictor.output_dim() {
            return Err(Error::Dimension(format!(
                "rnd target {:?} and predictor {:?} disagree",
                target.layer_sizes(),
                predictor.layer_sizes()
            )));
        }
        let adam = AdamState::new(
            predictor.param_count(),
            AdamConfig {
                learning_rate,
                ..AdamConfig::default()
            },
        );
        Ok(Self {
            target,
            predictor,
            adam,
        })
    }

    /// The frozen target network.
    pub fn target(&self) -> &Mlp {
        &self.target
    }

    /// `‖predictor(s') - target(s')‖²`; no parameter change.
    pub fn bonus(&self, next_state: &[f64]) -> Result<f64> {
        let p = self.predictor.forward(next_state)?;
        let t = self.target.forward(next_state)?;
        Ok(p.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    /// Mean squared prediction error over a batch.
    pub fn loss(&self, batch: &[Vec<f64>]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Usage("rnd loss on an empty batch".into()));
        }
        let mut total = 0.0;
        for s in batch {
            total += self.bonus(s)?;
        }
        Ok(total / batch.len() as f64)
    }

    /// One Adam step of the predictor toward the target. Returns the pre-step loss.
    pub fn update(&mut self, batch: &[Vec<f64>]) -> Result<f64> {
        let (loss, grads) = self.gradients(batch)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("rnd loss {loss}")));
        }
        adam_step(self.predictor.params_mut(), &grads, &mut self.adam)?;
        Ok(loss)
    }

    pub fn gradients(&self, batch: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Usage("rnd update on an empty batch".into()));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grads = vec![0.0; self.predictor.param_count()];
        let mut ws = self.predictor.workspace();
        let mut target_ws = self.target.workspace();
        let mut loss = 0.0;
        for s in batch {
            let t = self.target.forward_into(s, &mut target_ws)?;
            let p = self.predictor.forward_into(s, &mut ws)?;
            let diff: Vec<f64> = p.iter().zip(t).map(|(a, b)| a - b).collect();
            loss += scale * diff.iter().map(|d| d * d).sum::<f64>();
            let out_grad: Vec<f64> = diff.iter().map(|d| 2.0 * scale * d).collect();
            self.predictor.backward_into(&mut ws, &out_grad, &mut grads, None)?;
        }
        Ok((loss, grads))
    }
}

/// Welford running mean/variance.
#[derive(Debug, Clone, Default)]
pub struct RunningStd {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStd {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / self.count as f64).sqrt()
        }
    }

    /// `x / std`, or `x` unchanged until the spread is known.
    pub fn normalize(&self, x: f64) -> f64 {
        let std = self.std();
        if std > 1e-12 {
            x / std
        } else {
            x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn states(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect()
    }

    #[test]
    fn copy_of_target_gives_zero_bonus() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let target = Mlp::xavier(&[6, 16, 8], Activation::Tanh, &mut rng).unwrap();
        let nets = RndNets::from_nets(target.clone(), target, 1e-3).unwrap();
        for s in states(&mut rng, 20, 6) {
            assert_eq!(nets.bonus(&s).unwrap(), 0.0);
        }
    }

    #[test]
    fn training_leaves_target_untouched_and_lowers_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut nets = RndNets::new(5, &RndConfig::default(), &mut rng).unwrap();
        let batch = states(&mut rng, 32, 5);
        let checksum = nets.target().checksum();
        let mut last = f64::INFINITY;
        let small_lr = RndNets::from_nets(nets.target().clone(), nets.predictor.clone(), 1e-4).unwrap();
        nets = small_lr;
        for _ in 0..100 {
            let loss = nets.update(&batch).unwrap();
            assert!(loss < last, "loss went {last} -> {loss}");
            last = loss;
        }
        assert_eq!(nets.target().checksum(), checksum);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut nets = RndNets::new(5, &RndConfig::default(), &mut rng).unwrap();
        assert!(matches!(nets.update(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn running_std_matches_population_std() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let mut r = RunningStd::default();
        xs.iter().for_each(|&x| r.push(x));
        let mean = xs.iter().sum::<f64>() / 4.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((r.std() - var.sqrt()).abs() < 1e-12);
        assert_eq!(RunningStd::default().normalize(3.0), 3.0);
    }
}
