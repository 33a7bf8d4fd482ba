use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ige_core::harness::{self, ExperimentConfig, Overrides};
use ige_core::intrinsic::IntrinsicMethod;
use ige_core::rater::PromptVariant;
use ige_core::Error;

#[derive(Parser)]
#[command(name = "ige", version, about = "Rated intrinsic rewards for sparse-reward PPO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run per seed and write metrics, checkpoints and dictionaries.
    Train(Common),
    /// Repeat training for every λ in `sweep.lambdas`.
    SweepLambda(Common),
    /// Greedy success rates of trained checkpoints over noise × horizon.
    Grid(Common),
    /// Play episodes with the argmax of the rater's scores, no training.
    Direct {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "plain", value_parser = parse_variant)]
        variant: PromptVariant,
    },
    /// Draw SVG charts from aggregate.csv and grid.csv files.
    Plot {
        /// Run directories containing aggregate.csv; one curve each.
        #[arg(long = "run", num_args = 1..)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "normalized return")]
        title: String,
    },
    /// Rate every reachable state once and store the dictionaries.
    BuildDict(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; without it `--env` is required.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output root (runs are written to `<out>/<name>`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    method: Option<IntrinsicMethod>,
    #[arg(long)]
    lambda: Option<f64>,
    /// e.g. deepsea64 or seqchain7
    #[arg(long)]
    env: Option<String>,
}

fn parse_method(s: &str) -> Result<IntrinsicMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_variant(s: &str) -> Result<PromptVariant, String> {
    match s {
        "plain" => Ok(PromptVariant::Plain),
        "chain_of_thought" | "cot" => Ok(PromptVariant::ChainOfThought),
        _ => Err(format!("unknown prompt variant '{s}' (plain, chain_of_thought)")),
    }
}

impl Common {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.env) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(env)) => {
                let method = self.method.unwrap_or(IntrinsicMethod::None);
                ExperimentConfig::new(&format!("{env}-{method}"), harness::parse_env(env)?)
            }
            (None, None) => return Err(Error::Config("either --config or --env is required".into()).into()),
        };
        cfg.apply(&Overrides {
            seed: self.seed,
            out: self.out.clone(),
            method: self.method,
            lambda: self.lambda,
            env: self.env.clone(),
        })?;
        Ok(cfg)
    }
}

/// 0 success, 1 configuration, 2 run failure, 3 remote rater exhausted.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 1,
        Some(Error::Backend(_)) => 3,
        _ => 2,
    }
}

enum Outcome {
    Done,
    Failed,
    RemoteExhausted,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.load()?;
            let report = harness::run_training(&cfg)?;
            println!(
                "{}: final normalized return {:.3} ± {:.3} over {} seeds",
                report.run_dir.display(),
                report.final_mean,
                report.final_std,
                report.seeds.len()
            );
            for (seed, e) in &report.failures {
                eprintln!("seed {seed} failed: {e}");
            }
            Ok(if report.remote_exhausted {
                Outcome::RemoteExhausted
            } else if report.failures.is_empty() {
                Outcome::Done
            } else {
                Outcome::Failed
            })
        }
        Command::SweepLambda(c) => {
            let cfg = c.load()?;
            let lambdas = cfg.sweep.lambdas.clone();
            let mut outcome = Outcome::Done;
            for (lambda, report) in harness::run_sensitivity(&cfg, &lambdas)? {
                println!("lambda {lambda}: {:.3} ± {:.3}", report.final_mean, report.final_std);
                if report.remote_exhausted {
                    outcome = Outcome::RemoteExhausted;
                } else if !report.failures.is_empty() && matches!(outcome, Outcome::Done) {
                    outcome = Outcome::Failed;
                }
            }
            Ok(outcome)
        }
        Command::Grid(c) => {
            let cfg = c.load()?;
            let table = harness::run_robustness_grid(&cfg)?;
            for m in table.methods() {
                let cells: Vec<_> = table.cells.iter().filter(|x| x.method == m).collect();
                let mean = cells.iter().map(|x| x.success_rate).sum::<f64>() / cells.len() as f64;
                println!("{m}: {} cells, mean success {mean:.3}", cells.len());
            }
            println!("wrote {}", cfg.run_dir().join("grid.csv").display());
            Ok(Outcome::Done)
        }
        Command::Direct { common, variant } => {
            let cfg = common.load()?;
            let r = harness::run_direct_baselines(&cfg, variant)?;
            println!(
                "{} episodes, success rate {:.3}, mean normalized return {:.3}, {} rater queries",
                r.episodes, r.success_rate, r.mean_normalized_return, r.backend_calls
            );
            Ok(if r.remote_exhausted {
                Outcome::RemoteExhausted
            } else {
                Outcome::Done
            })
        }
        Command::Plot { runs, grid, out, title } => {
            if runs.is_empty() && grid.is_none() {
                bail!(Error::Config("plot needs --run and/or --grid".into()));
            }
            for path in harness::emit_plots(&runs, grid.as_deref(), &out, &title)? {
                println!("wrote {}", path.display());
            }
            Ok(Outcome::Done)
        }
        Command::BuildDict(c) => {
            let cfg = c.load()?;
            for (seed, d) in harness::build_dictionaries(&cfg)? {
                println!("seed {seed}: {} entries", d.len());
            }
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli).context("ige failed") {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(2),
        Ok(Outcome::RemoteExhausted) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
