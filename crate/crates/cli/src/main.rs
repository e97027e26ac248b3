use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use auv_cli::commands::{cmd_eval, cmd_train, Agent, EvalRequest, Suite};
use auv_cli::config::ExperimentConfig;
use auv_cli::scene::{scenario_by_name, write_scene};
use auv_core::environment::Difficulty;
use auv_core::exec::{limit_threads, Execution};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Train and evaluate PPO agents for AUV path following with collision avoidance.
#[derive(Parser)]
#[command(name = "auv", version)]
struct Cli {
    /// Cap the number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration file (`section.key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set ppo.actors=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for `--set reward.lambda_r=<value>`.
    #[arg(long)]
    lambda_r: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self, extra: &[(&str, String)]) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::defaults(),
        };
        for (i, kv) in self.set.iter().enumerate() {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set '{kv}': expected KEY=VALUE"))?;
            cfg.set(k.trim(), v, i + 1).with_context(|| format!("--set '{kv}'"))?;
        }
        if let Some(l) = self.lambda_r {
            cfg.env.reward.lambda_r = l;
        }
        for (k, v) in extra {
            cfg.set(k, v, 0).with_context(|| format!("--{k}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Quantitative,
    Pf,
    DeadEnd,
    Stacked,
}

#[derive(Subcommand)]
enum Command {
    /// Curriculum PPO training.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Master seed (train.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Environment step budget (ppo.total_steps).
        #[arg(long)]
        steps: Option<usize>,
        /// Output directory; defaults to a folder under the output root.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress progress lines.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Evaluate one or more checkpoints on a test suite.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Checkpoint file; repeat to compare agents.
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long, value_enum)]
        suite: SuiteArg,
        /// Episodes per level (eval.episodes).
        #[arg(long)]
        episodes: Option<usize>,
        /// Seed of the first scenario (eval.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Difficulty levels of the quantitative suite.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<Difficulty>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a scenario's waypoints, path samples and obstacles to text files.
    Scenario {
        /// Difficulty level or special scenario name.
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the resolved configuration.
    PrintConfig {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!("--jobs must be positive");
        }
        limit_threads(n);
    }
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Train {
            cfg,
            seed,
            steps,
            out,
            quiet,
        } => {
            let mut extra = Vec::new();
            if let Some(s) = seed {
                extra.push(("train.seed", s.to_string()));
            }
            if let Some(s) = steps {
                extra.push(("ppo.total_steps", s.to_string()));
            }
            let cfg = cfg.resolve(&extra)?;
            let out = out.unwrap_or_else(|| {
                cfg.output_root()
                    .join(format!("train-seed{}-lambda{}", cfg.train.seed, cfg.env.reward.lambda_r))
            });
            let s = cmd_train(&cfg, &out, exec, !quiet)?;
            println!(
                "trained {} steps in {} iterations, reached {}; checkpoint {}",
                s.total_steps,
                s.iterations,
                s.level,
                s.checkpoint.display()
            );
        }
        Command::Eval {
            cfg,
            checkpoints,
            suite,
            episodes,
            seed,
            levels,
            out,
        } => {
            let mut extra = Vec::new();
            if let Some(n) = episodes {
                extra.push(("eval.episodes", n.to_string()));
            }
            if let Some(s) = seed {
                extra.push(("eval.seed", s.to_string()));
            }
            let cfg = cfg.resolve(&extra)?;
            let agents = checkpoints
                .iter()
                .map(|p| Agent::load(p, cfg.env.reward.lambda_r))
                .collect::<Result<Vec<_>>>()?;
            let levels = if levels.is_empty() { Difficulty::ALL.to_vec() } else { levels };
            let name = format!("eval-{}", suite.to_possible_value().expect("no skipped variants").get_name());
            let suite = match suite {
                SuiteArg::Quantitative => Suite::Quantitative,
                SuiteArg::Pf => Suite::Pf,
                SuiteArg::DeadEnd => Suite::DeadEnd,
                SuiteArg::Stacked => Suite::Stacked,
            };
            let out = out.unwrap_or_else(|| cfg.output_root().join(name));
            let report = cmd_eval(&EvalRequest {
                cfg: &cfg,
                agents: &agents,
                suite,
                levels: &levels,
                out: &out,
                exec,
            })?;
            print!("{report}");
            println!("results written to {}", out.display());
        }
        Command::Scenario { name, seed, cfg, out } => {
            let cfg = cfg.resolve(&[])?;
            let sc = scenario_by_name(&name, seed, &cfg.env.scenario)?;
            let out = out.unwrap_or_else(|| cfg.output_root().join(format!("scenario-{name}-{seed}")));
            write_scene(&sc, &out)?;
            println!(
                "{}: {} waypoints, {} obstacles, path length {:.1} m; written to {}",
                sc.name,
                sc.waypoints().len(),
                sc.obstacles.len(),
                sc.path.length(),
                out.display()
            );
        }
        Command::PrintConfig { cfg } => print!("{}", cfg.resolve(&[])?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
