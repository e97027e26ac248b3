use std::fmt::Write as _;

use super::fit::{disturbance_sensitivity, fit_exponential, fit_quadratic, FitError};
use super::MetricsReport;
use crate::environment::{Difficulty, EpisodeOutcome, EpisodeStatus};

/// Outcome summary of one evaluation episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub difficulty: Difficulty,
    pub seed: u64,
    pub status: EpisodeStatus,
    pub steps: usize,
    pub avg_tracking_error: f64,
    pub min_clearance: f64,
    pub total_reward: f64,
}

impl EpisodeRecord {
    pub fn new(difficulty: Difficulty, seed: u64, o: &EpisodeOutcome) -> Self {
        Self {
            difficulty,
            seed,
            status: o.status,
            steps: o.steps,
            avg_tracking_error: o.avg_tracking_error,
            min_clearance: o.min_clearance,
            total_reward: o.total_reward,
        }
    }

    pub const CSV_HEADER: &'static str = "level,seed,status,steps,avg_tracking_error,min_clearance,total_reward";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:?},{:?},{:?}",
            self.difficulty,
            self.seed,
            self.status.name(),
            self.steps,
            self.avg_tracking_error,
            self.min_clearance,
            self.total_reward
        )
    }
}

pub const METRICS_HEADER: &str = "agent,lambda_r,level,episodes,success_pct,collision_pct,avg_tracking_error_m";

pub fn metrics_csv(reports: &[MetricsReport]) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for r in reports {
        for l in &r.levels {
            let _ = writeln!(
                s,
                "{},{},{},{},{:?},{:?},{:?}",
                r.label, r.lambda_r, l.difficulty, l.episodes, l.success_rate, l.collision_rate, l.avg_tracking_error
            );
        }
    }
    s
}

/// Aligned text table with one row per agent and level.
pub fn metrics_table(reports: &[MetricsReport]) -> String {
    let mut s = format!(
        "{:<16} {:>8} {:<13} {:>5} {:>10} {:>12} {:>14}\n",
        "agent", "lambda_r", "level", "N", "success %", "collision %", "avg error (m)"
    );
    for r in reports {
        for l in &r.levels {
            let _ = writeln!(
                s,
                "{:<16} {:>8.2} {:<13} {:>5} {:>10.1} {:>12.1} {:>14.3}",
                r.label,
                r.lambda_r,
                l.difficulty.name(),
                l.episodes,
                l.success_rate,
                l.collision_rate,
                l.avg_tracking_error
            );
        }
    }
    s
}

/// Tracking error of one agent on the pure path-following scenario, with and
/// without the fixed current.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub label: String,
    pub lambda_r: f64,
    pub ideal_error: f64,
    pub perturbed_error: f64,
}

impl SensitivityRow {
    pub fn sensitivity(&self) -> Option<f64> {
        disturbance_sensitivity(self.ideal_error, self.perturbed_error)
    }
}

pub const SENSITIVITY_HEADER: &str = "agent,lambda_r,ideal_error_m,perturbed_error_m,sensitivity_pct";

pub fn sensitivity_csv(rows: &[SensitivityRow]) -> String {
    let mut s = format!("{SENSITIVITY_HEADER}\n");
    for r in rows {
        let pct = r.sensitivity().map_or_else(|| "NA".to_string(), |v| format!("{v:?}"));
        let _ = writeln!(s, "{},{},{:?},{:?},{}", r.label, r.lambda_r, r.ideal_error, r.perturbed_error, pct);
    }
    s
}

pub fn sensitivity_table(rows: &[SensitivityRow]) -> String {
    let mut s = format!(
        "{:<16} {:>8} {:>10} {:>14} {:>13}\n",
        "agent", "lambda_r", "ideal (m)", "perturbed (m)", "sensitivity"
    );
    for r in rows {
        let pct = r.sensitivity().map_or_else(|| "n/a".to_string(), |v| format!("{v:.1}%"));
        let _ = writeln!(
            s,
            "{:<16} {:>8.2} {:>10.3} {:>14.3} {:>13}",
            r.label, r.lambda_r, r.ideal_error, r.perturbed_error, pct
        );
    }
    s
}

/// Fitted metric curves against `lambda_r`, sampled at 100 points per level
/// that every report covers. Success rate is fitted with a parabola, the
/// collision rate and tracking error with exponentials.
pub fn fitted_curves_csv(reports: &[MetricsReport]) -> Result<String, FitError> {
    let mut s = String::from("level,lambda_r,success_pct,collision_pct,avg_tracking_error_m\n");
    let xs: Vec<f64> = reports.iter().map(|r| r.lambda_r).collect();
    for d in Difficulty::ALL {
        let Some(levels) = reports.iter().map(|r| r.level(d)).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let column = |f: fn(&super::LevelMetrics) -> f64| levels.iter().map(|l| f(l)).collect::<Vec<_>>();
        let success = fit_quadratic(&xs, &column(|l| l.success_rate))?;
        let collision = fit_exponential(&xs, &column(|l| l.collision_rate))?;
        let error = fit_exponential(&xs, &column(|l| l.avg_tracking_error))?;
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for i in 0..100 {
            let x = lo + (hi - lo) * i as f64 / 99.0;
            let _ = writeln!(
                s,
                "{},{:?},{:?},{:?},{:?}",
                d,
                x,
                success.eval(x),
                collision.eval(x),
                error.eval(x)
            );
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::super::LevelMetrics;
    use super::*;

    fn report(lambda: f64, success: f64, collision: f64, err: f64) -> MetricsReport {
        MetricsReport {
            label: format!("agent-{lambda}"),
            lambda_r: lambda,
            levels: vec![LevelMetrics {
                difficulty: Difficulty::Advanced,
                episodes: 100,
                success_rate: success,
                collision_rate: collision,
                avg_tracking_error: err,
            }],
        }
    }

    #[test]
    fn fitted_curves_pass_through_three_presets() {
        let reports = [report(0.1, 60.0, 5.0, 2.0), report(0.5, 80.0, 10.0, 0.9), report(0.9, 55.0, 40.0, 0.5)];
        let csv = fitted_curves_csv(&reports).unwrap();
        let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 100);
        let first: Vec<f64> = rows[0][1..].iter().map(|v| v.parse().unwrap()).collect();
        let last: Vec<f64> = rows[99][1..].iter().map(|v| v.parse().unwrap()).collect();
        assert!((first[0] - 0.1).abs() < 1e-12 && (first[1] - 60.0).abs() < 1e-6);
        assert!((last[0] - 0.9).abs() < 1e-12 && (last[1] - 55.0).abs() < 1e-6);
    }

    #[test]
    fn tables_have_one_row_per_level() {
        let reports = [report(0.9, 52.0, 38.0, 0.6)];
        assert_eq!(metrics_csv(&reports).lines().count(), 2);
        assert_eq!(metrics_table(&reports).lines().count(), 2);
        let rows = [SensitivityRow {
            label: "a".into(),
            lambda_r: 0.9,
            ideal_error: 0.0,
            perturbed_error: 0.3,
        }];
        assert!(sensitivity_csv(&rows).ends_with(",NA\n"));
    }
}
