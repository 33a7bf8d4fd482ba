//! Sequential macro-action chain: an abstraction of a long-horizon
//! manipulation task where an orchestrating policy must trigger seven
//! precondition-gated skills in order.
//!
//! Observation layout (`7 + 3·5 + 7 = 29` entries with the default names):
//!
//! | range            | content                                             |
//! |------------------|-----------------------------------------------------|
//! | `0..A`           | completion flag per macro-action, 0/1               |
//! | `A..A+15`        | observed xyz (m) of the five objects of interest    |
//! | `A+15..A+22`     | proprioception placeholder (ee pos, vel, gripper), 0 |
//!
//! where `A` is the number of macro-actions.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{EnvObservation, Facts, Outcome, StepResult};
use crate::error::{Error, Result};

pub const DEFAULT_MACRO_ACTIONS: [&str; 7] = [
    "press_stop_button",
    "open_drawer",
    "pick_vial",
    "place_vial_in_rack",
    "close_drawer",
    "pick_rack",
    "place_rack_on_conveyor",
];

pub const OBJECTS_OF_INTEREST: [&str; 5] = ["stop_button", "drawer", "vial", "rack", "conveyor"];
const PROPRIO_DIM: usize = 7;

fn default_names() -> Vec<String> {
    DEFAULT_MACRO_ACTIONS.iter().map(|s| s.to_string()).collect()
}

fn default_max_steps() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqChainConfig {
    /// Task horizon: number of macro-actions still to execute at reset.
    pub case: usize,
    /// Observation noise standard deviation, centimetres.
    #[serde(default)]
    pub noise_sigma_cm: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_names")]
    pub macro_action_names: Vec<String>,
}

impl SeqChainConfig {
    pub fn new(case: usize) -> Self {
        Self {
            case,
            noise_sigma_cm: 0.0,
            max_steps: default_max_steps(),
            macro_action_names: default_names(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.macro_action_names.len();
        if n == 0 {
            return Err(Error::Config("seqchain needs at least one macro-action".into()));
        }
        if self.case == 0 || self.case > n {
            return Err(Error::Config(format!(
                "seqchain case must be in 1..={n}, got {}",
                self.case
            )));
        }
        if self.max_steps < self.case {
            return Err(Error::Config(format!(
                "max_steps {} is shorter than the horizon {}",
                self.max_steps, self.case
            )));
        }
        if !(self.noise_sigma_cm.is_finite() && self.noise_sigma_cm >= 0.0) {
            return Err(Error::Config(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.noise_sigma_cm
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SeqChain {
    config: SeqChainConfig,
    names: Arc<[String]>,
    flags: Vec<bool>,
    reference: Vec<f64>,
    observed: Vec<f64>,
    noise: Option<Normal<f64>>,
    steps: usize,
    done: bool,
}

impl SeqChain {
    pub fn new(config: SeqChainConfig) -> Result<Self> {
        config.validate()?;
        let sigma_m = config.noise_sigma_cm / 100.0;
        let noise = if sigma_m > 0.0 {
            Some(Normal::new(0.0, sigma_m).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        let n = config.macro_action_names.len();
        Ok(Self {
            names: config.macro_action_names.clone().into(),
            flags: vec![false; n],
            reference: vec![0.0; 3 * OBJECTS_OF_INTEREST.len()],
            observed: vec![0.0; 3 * OBJECTS_OF_INTEREST.len()],
            noise,
            steps: 0,
            done: true,
            config,
        })
    }

    pub fn config(&self) -> &SeqChainConfig {
        &self.config
    }

    pub fn action_count(&self) -> usize {
        self.flags.len()
    }

    pub fn observation_dim(&self) -> usize {
        self.flags.len() + self.reference.len() + PROPRIO_DIM
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// Index of the first macro-action not yet completed.
    pub fn next_required(&self) -> Option<usize> {
        self.flags.iter().position(|f| !f)
    }

    fn renoise<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        match &self.noise {
            Some(dist) => {
                for (obs, &reference) in self.observed.iter_mut().zip(&self.reference) {
                    *obs = reference + dist.sample(rng);
                }
            }
            None => self.observed.copy_from_slice(&self.reference),
        }
    }

    fn observe(&self) -> EnvObservation {
        let mut numeric = Vec::with_capacity(self.observation_dim());
        numeric.extend(self.flags.iter().map(|&f| if f { 1.0 } else { 0.0 }));
        numeric.extend_from_slice(&self.observed);
        numeric.extend(std::iter::repeat_n(0.0, PROPRIO_DIM));
        EnvObservation {
            numeric,
            facts: Facts::SeqChain {
                flags: self.flags.clone(),
                names: Arc::clone(&self.names),
            },
        }
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> EnvObservation {
        let preset = self.flags.len() - self.config.case;
        for (i, flag) in self.flags.iter_mut().enumerate() {
            *flag = i < preset;
        }
        for r in &mut self.reference {
            *r = rng.random::<f64>();
        }
        self.renoise(rng);
        self.steps = 0;
        self.done = false;
        self.observe()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> Result<StepResult> {
        if self.done {
            return Err(Error::Usage("seqchain step after episode end".into()));
        }
        if action >= self.flags.len() {
            return Err(Error::Usage(format!(
                "seqchain has {} macro-actions, got {action}",
                self.flags.len()
            )));
        }
        if self.next_required() == Some(action) {
            self.flags[action] = true;
        }
        self.steps += 1;
        self.renoise(rng);
        let (reward, outcome) = if self.flags.iter().all(|&f| f) {
            self.done = true;
            (1.0, Outcome::Goal)
        } else if self.steps >= self.config.max_steps {
            self.done = true;
            (0.0, Outcome::Timeout)
        } else {
            (0.0, Outcome::Ongoing)
        };
        Ok(StepResult {
            observation: self.observe(),
            extrinsic_reward: reward,
            done: self.done,
            outcome,
        })
    }
}
