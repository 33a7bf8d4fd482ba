use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create_dir, parallel_map, ExperimentConfig};
use crate::agent::{evaluate_greedy, load_checkpoint, stream_rng, PolicyValueNets, Stream};
use crate::envs::{EnvConfig, SeqChainConfig};
use crate::error::{Error, Result};

/// Greedy success rate of one method at one (noise, horizon) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub method: String,
    pub sigma_cm: f64,
    pub case: usize,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridTable {
    pub cells: Vec<GridCell>,
}

impl GridTable {
    pub fn methods(&self) -> Vec<String> {
        let mut m: Vec<String> = Vec::new();
        for c in &self.cells {
            if !m.contains(&c.method) {
                m.push(c.method.clone());
            }
        }
        m
    }

    pub fn cell(&self, method: &str, sigma_cm: f64, case: usize) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.sigma_cm == sigma_cm && c.case == case)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
        for c in &self.cells {
            w.serialize(c).map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let cells = r
            .deserialize::<GridCell>()
            .map(|row| row.map_err(|e| Error::Parse(format!("{}: {e}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        for c in &cells {
            if c.successes > c.episodes || c.success_rate != c.successes as f64 / c.episodes.max(1) as f64 {
                return Err(Error::Parse(format!(
                    "{}: inconsistent cell {} sigma {} case {}",
                    path.display(),
                    c.method,
                    c.sigma_cm,
                    c.case
                )));
            }
        }
        Ok(Self { cells })
    }
}

/// Checkpoints of every seed found under `dir`.
fn load_method(dir: &Path, seeds: &[u64]) -> Vec<(u64, PolicyValueNets)> {
    seeds
        .iter()
        .filter_map(|&seed| {
            let path = dir.join(seed.to_string()).join("checkpoint.bin");
            match load_checkpoint(&path) {
                Ok(nets) => Some((seed, nets)),
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    None
                }
            }
        })
        .collect()
}

/// Evaluates each method's checkpoints greedily over the σ × horizon grid
/// and writes `<run_dir>/grid.csv`. Episodes of a cell are dealt round-robin
/// across the available seeds; a method without any checkpoint has no cells.
pub fn run_robustness_grid(cfg: &ExperimentConfig) -> Result<GridTable> {
    cfg.validate()?;
    let base = match &cfg.env {
        EnvConfig::SeqChain(c) => c.clone(),
        EnvConfig::DeepSea(_) => return Err(Error::Config("the robustness grid needs a seqchain environment".into())),
    };
    if cfg.grid.methods.is_empty() {
        return Err(Error::Config("grid.methods is empty".into()));
    }
    if cfg.grid.episodes_per_cell == 0 {
        return Err(Error::Config("grid.episodes_per_cell must be positive".into()));
    }
    for &s in &cfg.grid.sigmas {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Config(format!("invalid grid sigma {s}")));
        }
    }

    let mut table = GridTable::default();
    for (method, dir) in &cfg.grid.methods {
        let nets = load_method(dir, &cfg.seeds);
        if nets.is_empty() {
            log::warn!("method {method}: no checkpoints under {}, cells absent", dir.display());
            continue;
        }
        let mut jobs = Vec::new();
        for (si, &sigma) in cfg.grid.sigmas.iter().enumerate() {
            for &case in &cfg.grid.cases {
                jobs.push((si, sigma, case));
            }
        }
        let cells = parallel_map(&jobs, cfg.workers, |&(si, sigma, case)| -> Result<GridCell> {
            let env = EnvConfig::SeqChain(SeqChainConfig {
                case,
                noise_sigma_cm: sigma,
                ..base.clone()
            });
            env.validate()?;
            let k = nets.len();
            let mut successes = 0;
            for (i, (seed, net)) in nets.iter().enumerate() {
                let episodes = cfg.grid.episodes_per_cell / k + usize::from(i < cfg.grid.episodes_per_cell % k);
                let cell_seed = seed.wrapping_mul(1_000_003).wrapping_add((si * 100 + case) as u64);
                let mut rng = stream_rng(cell_seed, Stream::Eval);
                successes += evaluate_greedy(net, &env, episodes, &mut rng)?
                    .iter()
                    .filter(|r| r.success)
                    .count();
            }
            let episodes = cfg.grid.episodes_per_cell;
            Ok(GridCell {
                method: method.clone(),
                sigma_cm: sigma,
                case,
                episodes,
                successes,
                success_rate: successes as f64 / episodes as f64,
            })
        });
        for c in cells {
            table.cells.push(c?);
        }
    }
    let dir = cfg.run_dir();
    create_dir(&dir)?;
    table.write_csv(&dir.join("grid.csv"))?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(method: &str, sigma: f64, case: usize, successes: usize) -> GridCell {
        GridCell {
            method: method.into(),
            sigma_cm: sigma,
            case,
            episodes: 10,
            successes,
            success_rate: successes as f64 / 10.0,
        }
    }

    #[test]
    fn csv_round_trip_and_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        let t = GridTable {
            cells: vec![cell("ige", 0.0, 1, 10), cell("ige", 0.5, 1, 3), cell("rnd", 0.0, 1, 0)],
        };
        t.write_csv(&path).unwrap();
        let back = GridTable::read_csv(&path).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.methods(), vec!["ige", "rnd"]);
        assert_eq!(back.cell("ige", 0.5, 1).unwrap().successes, 3);
        assert!(back.cell("ige", 2.0, 1).is_none());
    }

    #[test]
    fn inconsistent_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        let mut c = cell("ige", 0.0, 1, 5);
        c.success_rate = 0.9;
        GridTable { cells: vec![c] }.write_csv(&path).unwrap();
        assert!(matches!(GridTable::read_csv(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn deepsea_is_rejected() {
        let mut cfg = ExperimentConfig::new("g", EnvConfig::DeepSea(crate::envs::DeepSeaConfig { size: 8 }));
        cfg.grid.methods.insert("x".into(), "nowhere".into());
        assert!(matches!(run_robustness_grid(&cfg), Err(Error::Config(_))));
    }
}
