//! Action ratings in `[0, 1]`: state descriptions, the per-seed rating
//! dictionary, prompt templates and the interchangeable backends.

pub mod describe;
pub mod dictionary;
pub mod oracle;
pub mod prompt;
pub mod remote;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use describe::{describe_state, StateDescription};
pub use dictionary::RatingDictionary;
pub use oracle::{corrupt, oracle_deepsea, oracle_seqchain};
pub use prompt::{PromptTemplate, PromptVariant};
pub use remote::RemoteConfig;

use crate::envs::{EnvKind, EnvObservation};
use crate::error::{Error, Result};

/// Something that scores all actions of a state in one call.
pub trait RatingBackend: Send {
    fn rate(&mut self, desc: &StateDescription, action_names: &[String]) -> Result<Vec<f64>>;

    /// Failed attempts the backend retried internally.
    fn retries(&self) -> u64 {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBackend {
    env: EnvKind,
}

impl OracleBackend {
    pub fn new(env: EnvKind) -> Self {
        Self { env }
    }
}

impl RatingBackend for OracleBackend {
    fn rate(&mut self, desc: &StateDescription, action_names: &[String]) -> Result<Vec<f64>> {
        match self.env {
            EnvKind::DeepSea => oracle_deepsea(desc.key()),
            EnvKind::SeqChain => oracle_seqchain(desc.key(), action_names),
        }
    }
}

/// The scripted oracle with its top choice moved elsewhere with probability ε.
#[derive(Debug, Clone)]
pub struct CorruptedOracle {
    oracle: OracleBackend,
    epsilon: f64,
    rng: ChaCha8Rng,
    pub corrupted: u64,
}

impl CorruptedOracle {
    pub fn new(env: EnvKind, epsilon: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Config(format!("epsilon {epsilon} outside [0, 1]")));
        }
        Ok(Self {
            oracle: OracleBackend::new(env),
            epsilon,
            rng: ChaCha8Rng::seed_from_u64(seed),
            corrupted: 0,
        })
    }
}

impl RatingBackend for CorruptedOracle {
    fn rate(&mut self, desc: &StateDescription, action_names: &[String]) -> Result<Vec<f64>> {
        let clean = self.oracle.rate(desc, action_names)?;
        let (scores, hit) = corrupt(clean, self.epsilon, &mut self.rng)?;
        self.corrupted += hit as u64;
        Ok(scores)
    }
}

#[cfg(feature = "remote")]
impl RatingBackend for remote::RemoteClient {
    fn rate(&mut self, desc: &StateDescription, action_names: &[String]) -> Result<Vec<f64>> {
        remote::RemoteClient::rate(self, desc.key(), action_names)
    }

    fn retries(&self) -> u64 {
        self.retries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaterKind {
    /// The scripted oracle of whichever environment is configured.
    Oracle,
    OracleDeepsea,
    OracleSeqchain,
    CorruptedOracle,
    RemoteLlm,
}

fn default_kind() -> RaterKind {
    RaterKind::Oracle
}

/// `[rater]` section of the experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaterConfig {
    #[serde(default = "default_kind")]
    pub kind: RaterKind,
    /// Corruption probability for `corrupted_oracle`.
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub variant: PromptVariant,
    #[serde(default)]
    pub initial_prompt: Option<PathBuf>,
    #[serde(default)]
    pub recurring_prompt: Option<PathBuf>,
    #[serde(default)]
    pub remote: RemoteConfig,
}

impl Default for RaterConfig {
    fn default() -> Self {
        Self {
            kind: RaterKind::Oracle,
            epsilon: 0.0,
            variant: PromptVariant::Plain,
            initial_prompt: None,
            recurring_prompt: None,
            remote: RemoteConfig::default(),
        }
    }
}

impl RaterConfig {
    pub fn corrupted(epsilon: f64) -> Self {
        Self {
            kind: RaterKind::CorruptedOracle,
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self, env: EnvKind) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("rater epsilon {} outside [0, 1]", self.epsilon)));
        }
        match (self.kind, env) {
            (RaterKind::OracleDeepsea, EnvKind::SeqChain) | (RaterKind::OracleSeqchain, EnvKind::DeepSea) => {
                Err(Error::Config(format!("rater {:?} does not match environment {env:?}", self.kind)))
            }
            _ => Ok(()),
        }
    }

    pub fn template(&self, env: EnvKind) -> Result<PromptTemplate> {
        match (&self.initial_prompt, &self.recurring_prompt) {
            (Some(i), Some(r)) => PromptTemplate::from_files(i, r, self.variant),
            (None, None) => Ok(PromptTemplate::default_for(env, self.variant)),
            _ => Err(Error::Config("initial_prompt and recurring_prompt must be given together".into())),
        }
    }

    /// `seed` drives the corruption stream of `corrupted_oracle`.
    pub fn build_backend(&self, env: EnvKind, seed: u64) -> Result<Box<dyn RatingBackend>> {
        self.validate(env)?;
        Ok(match self.kind {
            RaterKind::Oracle | RaterKind::OracleDeepsea | RaterKind::OracleSeqchain => {
                Box::new(OracleBackend::new(env))
            }
            RaterKind::CorruptedOracle => Box::new(CorruptedOracle::new(env, self.epsilon, seed)?),
            #[cfg(feature = "remote")]
            RaterKind::RemoteLlm => Box::new(remote::RemoteClient::new(
                self.remote.clone(),
                self.template(env)?,
                None,
            )?),
            #[cfg(not(feature = "remote"))]
            RaterKind::RemoteLlm => {
                return Err(Error::Config("built without the remote rater backend".into()));
            }
        })
    }
}

/// A backend behind a rating dictionary with lookup-then-store semantics.
pub struct Rater {
    backend: Box<dyn RatingBackend>,
    dictionary: RatingDictionary,
    backend_calls: u64,
    fallbacks: u64,
}

impl Rater {
    pub fn new(backend: Box<dyn RatingBackend>, dictionary: RatingDictionary) -> Self {
        Self {
            backend,
            dictionary,
            backend_calls: 0,
            fallbacks: 0,
        }
    }

    /// Stored scores for a known key; otherwise one backend query whose
    /// clamped result is stored. A failed query yields 0.5 for every action
    /// and stores nothing.
    pub fn rate(&mut self, desc: &StateDescription) -> Vec<f64> {
        if let Some(scores) = self.dictionary.get(desc.key()).map(<[f64]>::to_vec) {
            self.dictionary.hit_count += 1;
            return scores;
        }
        self.dictionary.miss_count += 1;
        self.backend_calls += 1;
        let n = self.dictionary.action_names.len();
        let result = self
            .backend
            .rate(desc, &self.dictionary.action_names)
            .and_then(|scores| {
                if scores.len() == n {
                    Ok(scores)
                } else {
                    Err(Error::Dimension(format!("backend returned {} scores for {n} actions", scores.len())))
                }
            });
        match result {
            Ok(scores) => {
                let scores: Vec<f64> = scores.into_iter().map(clamp_score).collect();
                self.dictionary
                    .insert(desc.text.clone(), scores.clone())
                    .expect("clamped scores of the right length are valid");
                scores
            }
            Err(e) => {
                log::warn!("rating {:?} failed, using uniform 0.5: {e}", desc.key());
                self.fallbacks += 1;
                vec![0.5; n]
            }
        }
    }

    pub fn rate_observation(&mut self, obs: &EnvObservation) -> Vec<f64> {
        self.rate(&describe_state(obs))
    }

    pub fn backend_calls(&self) -> u64 {
        self.backend_calls
    }

    /// Queries that fell back to uniform scores.
    pub fn fallbacks(&self) -> u64 {
        self.fallbacks
    }

    pub fn retries(&self) -> u64 {
        self.backend.retries()
    }

    pub fn dictionary(&self) -> &RatingDictionary {
        &self.dictionary
    }

    /// Drops every stored rating and the hit/miss counts.
    pub fn reset_dictionary(&mut self) {
        let d = &self.dictionary;
        self.dictionary = RatingDictionary::new(d.seed, d.action_names.clone());
    }

    pub fn into_dictionary(self) -> RatingDictionary {
        self.dictionary
    }
}

fn clamp_score(s: f64) -> f64 {
    if s.is_nan() {
        log::warn!("backend score NaN replaced by 0");
        return 0.0;
    }
    let c = s.clamp(0.0, 1.0);
    if c != s {
        log::warn!("backend score {s} clamped to {c}");
    }
    c
}
