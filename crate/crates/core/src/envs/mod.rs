//! Episodic sparse-reward environments behind one reset/step interface.

pub mod deepsea;
pub mod seqchain;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use deepsea::{DeepSea, DeepSeaConfig};
pub use seqchain::{SeqChain, SeqChainConfig};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    DeepSea,
    SeqChain,
}

/// The facts a textual state description is built from.
#[derive(Debug, Clone, PartialEq)]
pub enum Facts {
    DeepSea {
        col: usize,
        row: usize,
        goal_col: usize,
        goal_row: usize,
    },
    SeqChain {
        /// Completion flag per macro-action, in macro-action order.
        flags: Vec<bool>,
        names: Arc<[String]>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvObservation {
    /// Raw numeric state: DeepSea `[x1, y1, x2, y2]`; SeqChain flags,
    /// object positions and proprioception (see [`seqchain`]).
    pub numeric: Vec<f64>,
    pub facts: Facts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Ongoing,
    Goal,
    Failure,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: EnvObservation,
    /// Nonzero only on the final step of an episode.
    pub extrinsic_reward: f64,
    pub done: bool,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvConfig {
    DeepSea(DeepSeaConfig),
    SeqChain(SeqChainConfig),
}

impl EnvConfig {
    pub fn kind(&self) -> EnvKind {
        match self {
            EnvConfig::DeepSea(_) => EnvKind::DeepSea,
            EnvConfig::SeqChain(_) => EnvKind::SeqChain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvConfig::DeepSea(c) => c.validate(),
            EnvConfig::SeqChain(c) => c.validate(),
        }
    }

    pub fn build(&self) -> Result<Env> {
        Ok(match self {
            EnvConfig::DeepSea(c) => Env::DeepSea(DeepSea::new(c.clone())?),
            EnvConfig::SeqChain(c) => Env::SeqChain(SeqChain::new(c.clone())?),
        })
    }

    pub fn action_names(&self) -> Vec<String> {
        match self {
            EnvConfig::DeepSea(_) => deepsea::ACTION_NAMES.iter().map(|s| s.to_string()).collect(),
            EnvConfig::SeqChain(c) => c.macro_action_names.clone(),
        }
    }

    /// Short label used in run names and plots, e.g. `deepsea64` or `seqchain7`.
    pub fn label(&self) -> String {
        match self {
            EnvConfig::DeepSea(c) => format!("deepsea{}", c.size),
            EnvConfig::SeqChain(c) => format!("seqchain{}", c.case),
        }
    }

    /// Training steps used when a config does not set `agent.total_steps`.
    pub fn default_budget(&self) -> u64 {
        match self {
            EnvConfig::DeepSea(c) if c.size <= 8 => 200_000,
            EnvConfig::DeepSea(_) => 1_000_000,
            EnvConfig::SeqChain(_) => 500_000,
        }
    }
}

/// Maps a raw episode return onto `[0, 1]`: DeepSea `{-1, +1} -> {0, 1}`,
/// SeqChain unchanged.
pub fn normalize_return(kind: EnvKind, raw: f64) -> f64 {
    match kind {
        EnvKind::DeepSea => ((raw + 1.0) / 2.0).clamp(0.0, 1.0),
        EnvKind::SeqChain => raw.clamp(0.0, 1.0),
    }
}

#[derive(Debug, Clone)]
pub enum Env {
    DeepSea(DeepSea),
    SeqChain(SeqChain),
}

impl Env {
    pub fn kind(&self) -> EnvKind {
        match self {
            Env::DeepSea(_) => EnvKind::DeepSea,
            Env::SeqChain(_) => EnvKind::SeqChain,
        }
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> EnvObservation {
        match self {
            Env::DeepSea(e) => e.reset(),
            Env::SeqChain(e) => e.reset(rng),
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> Result<StepResult> {
        match self {
            Env::DeepSea(e) => e.step(action),
            Env::SeqChain(e) => e.step(action, rng),
        }
    }

    pub fn action_count(&self) -> usize {
        match self {
            Env::DeepSea(_) => 2,
            Env::SeqChain(e) => e.action_count(),
        }
    }

    pub fn observation_dim(&self) -> usize {
        match self {
            Env::DeepSea(_) => 4,
            Env::SeqChain(e) => e.observation_dim(),
        }
    }

    /// Length of [`Env::features`].
    pub fn feature_dim(&self) -> usize {
        match self {
            Env::DeepSea(e) => 2 * e.config().size,
            Env::SeqChain(e) => e.observation_dim(),
        }
    }

    /// Network input for an observation. DeepSea positions become a one-hot
    /// column followed by a one-hot row, so values learned in visited cells
    /// do not extrapolate into unvisited ones. SeqChain observations are
    /// already on a unit scale and pass through unchanged.
    pub fn features(&self, obs: &EnvObservation) -> Vec<f64> {
        match (self, &obs.facts) {
            (Env::DeepSea(e), Facts::DeepSea { col, row, .. }) => {
                let n = e.config().size;
                let mut x = vec![0.0; 2 * n];
                x[*col] = 1.0;
                x[n + *row] = 1.0;
                x
            }
            _ => obs.numeric.clone(),
        }
    }
}
