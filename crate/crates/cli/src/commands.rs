use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use auv_core::environment::{trajectory_to_csv, Difficulty, EnvConfig, EpisodeOutcome};
use auv_core::eval::{
    fitted_curves_csv, make_dead_end_scenario, make_pure_pf_scenario, make_stacked_scenario, metrics_csv, metrics_table,
    run_episodes, run_scenario, sensitivity_csv, sensitivity_table, EpisodeRecord, LevelMetrics, MetricsReport, SensitivityRow,
    StackDirection,
};
use auv_core::exec::Execution;
use auv_core::ppo::{curve_to_csv, train, ActorCritic, Checkpoint, TrainError};

use crate::config::ExperimentConfig;

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    if let Some(parent) = p.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

pub struct TrainSummary {
    pub checkpoint: PathBuf,
    pub iterations: usize,
    pub total_steps: usize,
    pub level: Difficulty,
}

fn checkpoint_of(model: ActorCritic, cfg: &ExperimentConfig, steps: usize, level: Difficulty) -> Checkpoint {
    Checkpoint::new(model)
        .with_meta("lambda_r", cfg.env.reward.lambda_r)
        .with_meta("seed", cfg.train.seed)
        .with_meta("total_steps", steps)
        .with_meta("level", level)
}

/// Curriculum training. Writes `config.txt`, `curve.csv` and
/// `checkpoint.txt` to `out`.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path, exec: Execution, verbose: bool) -> Result<TrainSummary> {
    cfg.validate()?;
    write(out, "config.txt", &cfg.to_text())?;
    let mut iterations = 0;
    let result = train(&cfg.env, &cfg.train, exec, |p, _| {
        iterations += 1;
        if verbose && p.iteration % 10 == 0 {
            eprintln!(
                "iter {:>5}  steps {:>9}  level {:<12}  episodes {:>3}  success {:>5.2}  error {:>7.2}  kl {:.4}",
                p.iteration, p.total_steps, p.level, p.episodes, p.success_rate, p.tracking_error, p.approx_kl
            );
        }
    });
    let checkpoint = out.join("checkpoint.txt");
    match result {
        Ok(o) => {
            write(out, "curve.csv", &curve_to_csv(&o.curve))?;
            checkpoint_of(o.model, cfg, o.total_steps, o.level).save(&checkpoint)?;
            Ok(TrainSummary {
                checkpoint,
                iterations,
                total_steps: o.total_steps,
                level: o.level,
            })
        }
        Err(TrainError::NumericalFault {
            iteration,
            message,
            last_good,
        }) => {
            let saved = out.join("checkpoint-last-good.txt");
            checkpoint_of(*last_good, cfg, 0, cfg.train.curriculum.start)
                .with_meta("fault_iteration", iteration)
                .save(&saved)?;
            bail!("numerical fault in iteration {iteration}: {message}; last good weights saved to {}", saved.display())
        }
        Err(e) => Err(e.into()),
    }
}

/// A loaded policy with its report label and trade-off setting.
pub struct Agent {
    pub label: String,
    pub lambda_r: f64,
    pub model: ActorCritic,
}

impl Agent {
    pub fn load(path: &Path, default_lambda: f64) -> Result<Self> {
        let ck = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
        let lambda_r = match ck.meta("lambda_r") {
            Some(v) => v.parse().with_context(|| format!("{}: bad lambda_r '{v}'", path.display()))?,
            None => default_lambda,
        };
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let label = match path.parent().and_then(|p| p.file_name()) {
            Some(dir) if stem == "checkpoint" => dir.to_string_lossy().into_owned(),
            _ => stem,
        };
        Ok(Self {
            label,
            lambda_r,
            model: ck.model,
        })
    }

    fn env(&self, base: &EnvConfig) -> EnvConfig {
        let mut e = base.clone();
        e.reward.lambda_r = self.lambda_r;
        e
    }

    fn policy(&self) -> impl Fn(&[f64]) -> [f64; 2] + Sync + '_ {
        move |obs: &[f64]| self.model.act_deterministic(obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Quantitative,
    Pf,
    DeadEnd,
    Stacked,
}

pub struct EvalRequest<'a> {
    pub cfg: &'a ExperimentConfig,
    pub agents: &'a [Agent],
    pub suite: Suite,
    pub levels: &'a [Difficulty],
    pub out: &'a Path,
    pub exec: Execution,
}

/// Runs one evaluation suite and returns the text report that was printed
/// to `report.txt`.
pub fn cmd_eval(req: &EvalRequest) -> Result<String> {
    req.cfg.validate()?;
    let obs_dim = req.cfg.env.obs_dim();
    for a in req.agents {
        if a.model.obs_dim() != obs_dim {
            bail!(
                "checkpoint '{}' expects {} observations but the configuration produces {obs_dim}",
                a.label,
                a.model.obs_dim()
            );
        }
    }
    write(req.out, "config.txt", &req.cfg.to_text())?;
    let report = match req.suite {
        Suite::Quantitative => quantitative(req)?,
        Suite::Pf => pure_pf(req)?,
        Suite::DeadEnd => special(req, &[("dead-end", make_dead_end_scenario())])?,
        Suite::Stacked => special(
            req,
            &[
                ("stacked-horizontal", make_stacked_scenario(StackDirection::Horizontal)),
                ("stacked-vertical", make_stacked_scenario(StackDirection::Vertical)),
            ],
        )?,
    };
    write(req.out, "report.txt", &report)?;
    Ok(report)
}

fn quantitative(req: &EvalRequest) -> Result<String> {
    let e = &req.cfg.eval;
    let mut reports = Vec::new();
    let mut episodes = format!("agent,{}\n", EpisodeRecord::CSV_HEADER);
    for a in req.agents {
        let env = a.env(&req.cfg.env);
        let mut levels = Vec::new();
        for &d in req.levels {
            let records = run_episodes(&a.policy(), &env, d, e.episodes, e.seed, req.exec)?;
            for r in &records {
                let _ = writeln!(episodes, "{},{}", a.label, r.csv_row());
            }
            levels.push(LevelMetrics::from_records(d, &records));
        }
        reports.push(MetricsReport {
            label: a.label.clone(),
            lambda_r: a.lambda_r,
            levels,
        });
    }
    write(req.out, "metrics.csv", &metrics_csv(&reports))?;
    write(req.out, "episodes.csv", &episodes)?;
    let mut text = metrics_table(&reports);
    if reports.len() >= 3 {
        match fitted_curves_csv(&reports) {
            Ok(csv) => write(req.out, "fitted_curves.csv", &csv)?,
            Err(err) => {
                let _ = writeln!(text, "curve fit skipped: {err}");
            }
        }
    }
    Ok(text)
}

fn save_trajectory(req: &EvalRequest, name: &str, o: &EpisodeOutcome) -> Result<()> {
    write(req.out, &format!("trajectories/{name}.csv"), &trajectory_to_csv(&o.trajectory))
}

fn pure_pf(req: &EvalRequest) -> Result<String> {
    let mut rows = Vec::new();
    for a in req.agents {
        let mut env = a.env(&req.cfg.env);
        env.record_trajectory = true;
        let ideal = run_scenario(&a.policy(), &env, make_pure_pf_scenario(false))?;
        let perturbed = run_scenario(&a.policy(), &env, make_pure_pf_scenario(true))?;
        save_trajectory(req, &format!("{}-ideal", a.label), &ideal)?;
        save_trajectory(req, &format!("{}-perturbed", a.label), &perturbed)?;
        rows.push(SensitivityRow {
            label: a.label.clone(),
            lambda_r: a.lambda_r,
            ideal_error: ideal.avg_tracking_error,
            perturbed_error: perturbed.avg_tracking_error,
        });
    }
    write(req.out, "sensitivity.csv", &sensitivity_csv(&rows))?;
    Ok(sensitivity_table(&rows))
}

fn special(req: &EvalRequest, scenarios: &[(&str, auv_core::environment::ScenarioConfig)]) -> Result<String> {
    let mut csv = String::from("agent,lambda_r,scenario,status,steps,avg_tracking_error,min_clearance,final_distance\n");
    let mut text = format!(
        "{:<16} {:>8} {:<20} {:<10} {:>6} {:>10} {:>14}\n",
        "agent", "lambda_r", "scenario", "status", "steps", "error (m)", "clearance (m)"
    );
    for a in req.agents {
        let mut env = a.env(&req.cfg.env);
        env.record_trajectory = true;
        for (name, sc) in scenarios {
            let o = run_scenario(&a.policy(), &env, sc.clone())?;
            save_trajectory(req, &format!("{}-{name}", a.label), &o)?;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{:?},{:?},{:?}",
                a.label,
                a.lambda_r,
                name,
                o.status.name(),
                o.steps,
                o.avg_tracking_error,
                o.min_clearance,
                o.final_distance
            );
            let _ = writeln!(
                text,
                "{:<16} {:>8.2} {:<20} {:<10} {:>6} {:>10.3} {:>14.3}",
                a.label,
                a.lambda_r,
                name,
                o.status.name(),
                o.steps,
                o.avg_tracking_error,
                o.min_clearance
            );
        }
    }
    write(req.out, "outcomes.csv", &csv)?;
    Ok(text)
}
