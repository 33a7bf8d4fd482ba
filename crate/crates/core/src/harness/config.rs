use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::PpoConfig;
use crate::envs::{DeepSeaConfig, EnvConfig, SeqChainConfig};
use crate::error::{Error, Result};
use crate::intrinsic::{IntrinsicConfig, IntrinsicMethod};
use crate::rater::RaterConfig;

fn default_name() -> String {
    "experiment".into()
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

fn default_workers() -> usize {
    1
}

/// One experiment: an environment, an intrinsic method, PPO settings, a rater
/// and the seeds to run. Read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// Concurrent runs.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Run directory whose `<seed>/dictionary.json` files seed each run's rater.
    #[serde(default)]
    pub preload_dictionaries: Option<PathBuf>,
    pub env: EnvConfig,
    #[serde(default)]
    pub intrinsic: IntrinsicConfig,
    #[serde(default)]
    pub agent: PpoConfig,
    #[serde(default)]
    pub rater: RaterConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub direct: DirectConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![0.001, 0.01, 0.1, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Observation noise levels, centimetres.
    pub sigmas: Vec<f64>,
    pub cases: Vec<usize>,
    pub episodes_per_cell: usize,
    /// Method label to the run directory holding its `<seed>/checkpoint.bin` files.
    pub methods: BTreeMap<String, PathBuf>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            sigmas: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            cases: (1..=7).collect(),
            episodes_per_cell: 1000,
            methods: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectConfig {
    /// Episodes per seed.
    pub episodes: usize,
    /// Start every episode with an empty rating dictionary, so a corrupted
    /// rater draws fresh corruption each episode.
    pub fresh_dictionary_per_episode: bool,
}

impl Default for DirectConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            fresh_dictionary_per_episode: true,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub method: Option<IntrinsicMethod>,
    pub lambda: Option<f64>,
    pub env: Option<String>,
}

/// `deepsea64`, `deepsea:64`, `seqchain7` or `seqchain:7`.
pub fn parse_env(spec: &str) -> Result<EnvConfig> {
    let bad = || Error::Config(format!("unknown environment '{spec}', expected e.g. deepsea64 or seqchain7"));
    let s = spec.to_ascii_lowercase();
    let (kind, num) = if let Some(rest) = s.strip_prefix("deepsea") {
        ("deepsea", rest)
    } else if let Some(rest) = s.strip_prefix("seqchain") {
        ("seqchain", rest)
    } else {
        return Err(bad());
    };
    let n: usize = num.trim_start_matches(':').parse().map_err(|_| bad())?;
    let cfg = match kind {
        "deepsea" => EnvConfig::DeepSea(DeepSeaConfig { size: n }),
        _ => EnvConfig::SeqChain(SeqChainConfig::new(n)),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn new(name: &str, env: EnvConfig) -> Self {
        let budget = env.default_budget();
        Self {
            name: name.into(),
            seeds: default_seeds(),
            out_dir: default_out(),
            workers: default_workers(),
            preload_dictionaries: None,
            env,
            intrinsic: IntrinsicConfig::default(),
            agent: PpoConfig {
                total_steps: budget,
                ..PpoConfig::default()
            },
            rater: RaterConfig::default(),
            sweep: SweepConfig::default(),
            grid: GridConfig::default(),
            direct: DirectConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let budget_given = table
            .get("agent")
            .and_then(|a| a.get("total_steps"))
            .is_some();
        let mut cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if !budget_given {
            cfg.agent.total_steps = cfg.env.default_budget();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seeds = vec![seed];
        }
        if let Some(out) = &o.out {
            self.out_dir = out.clone();
        }
        if let Some(method) = o.method {
            self.intrinsic.method = method;
        }
        if let Some(lambda) = o.lambda {
            self.intrinsic.lambda = lambda;
        }
        if let Some(env) = &o.env {
            self.env = match (parse_env(env)?, &self.env) {
                (EnvConfig::SeqChain(new), EnvConfig::SeqChain(old)) => EnvConfig::SeqChain(SeqChainConfig {
                    case: new.case,
                    ..old.clone()
                }),
                (new, _) => new,
            };
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.name.is_empty() || self.name.contains("..") {
            return Err(Error::Config(format!("invalid experiment name '{}'", self.name)));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.env.validate()?;
        self.intrinsic.validate()?;
        self.agent.validate()?;
        self.rater.validate(self.env.kind())
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(&self.name)
    }
}
