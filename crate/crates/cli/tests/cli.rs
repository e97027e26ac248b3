use std::path::Path;
use std::process::{Command, Output};

use auv_cli::config::ExperimentConfig;
use auv_cli::scene::read_scene;
use auv_core::environment::make_scenario;
use auv_core::environment::Difficulty;
use auv_core::ppo::{initial_model, Checkpoint};

const SMALL: &[&str] = &[
    "--set",
    "ppo.actors=1",
    "--set",
    "ppo.horizon=256",
    "--set",
    "ppo.minibatch=64",
    "--set",
    "ppo.epochs=2",
    "--set",
    "train.hidden=8,8",
    "--set",
    "curriculum.end=beginner",
];

fn auv(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auv"))
        .args(args)
        .env("AUV_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], root: &Path) -> String {
    let o = auv(args, root);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn train(dir: &Path, steps: &str, extra: &[&str]) {
    let out = dir.to_str().unwrap();
    let mut args = vec!["train", "--quiet", "--steps", steps, "--out", out];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    ok(&args, dir);
}

#[test]
fn print_config_round_trips_with_override() {
    let tmp = tempfile::tempdir().unwrap();
    let text = ok(&["print-config", "--lambda-r", "0.5"], tmp.path());
    assert!(text.lines().any(|l| l == "reward.lambda_r = 0.5"));
    let cfg = ExperimentConfig::from_text(&text).unwrap();
    assert_eq!(cfg.env.reward.lambda_r, 0.5);
    let mut expected = ExperimentConfig::defaults();
    expected.env.reward.lambda_r = 0.5;
    assert_eq!(cfg, expected);
}

#[test]
fn zero_budget_writes_initial_weights_and_echoes_config() {
    let tmp = tempfile::tempdir().unwrap();
    train(tmp.path(), "0", &["--lambda-r", "0.5", "--seed", "9"]);
    let echoed = std::fs::read_to_string(tmp.path().join("config.txt")).unwrap();
    let cfg = ExperimentConfig::from_text(&echoed).unwrap();
    assert_eq!(cfg.env.reward.lambda_r, 0.5);
    assert_eq!(cfg.train.seed, 9);
    let ck = Checkpoint::load(&tmp.path().join("checkpoint.txt")).unwrap();
    assert_eq!(ck.model, initial_model(&cfg.env, &cfg.train));
    assert_eq!(ck.meta("lambda_r"), Some("0.5"));
}

#[test]
fn training_is_reproducible_from_echoed_config() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    train(&a, "512", &[]);
    train(&b, "512", &[]);
    let cfg_path = a.join("config.txt");
    ok(
        &["train", "--quiet", "--config", cfg_path.to_str().unwrap(), "--out", c.to_str().unwrap()],
        tmp.path(),
    );
    let read = |d: &Path, f: &str| std::fs::read_to_string(d.join(f)).unwrap();
    for f in ["checkpoint.txt", "curve.csv", "config.txt"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
        assert_eq!(read(&a, f), read(&c, f), "{f}");
    }
    assert_eq!(read(&a, "curve.csv").lines().count(), 3);
}

#[test]
fn config_errors_report_line_and_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("bad.cfg");
    std::fs::write(&p, "# comment\nppo.actor = 3\n").unwrap();
    let o = auv(&["print-config", "--config", p.to_str().unwrap()], tmp.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("ppo.actor"), "{err}");
    let o = auv(&["print-config", "--set", "ppo.clip=3"], tmp.path());
    assert!(!o.status.success());
}

#[test]
fn quantitative_eval_reports_each_level() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    train(&run, "0", &[]);
    let ck = run.join("checkpoint.txt");
    let out = tmp.path().join("eval");
    ok(
        &[
            "eval",
            "--checkpoint",
            ck.to_str().unwrap(),
            "--suite",
            "quantitative",
            "--episodes",
            "5",
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let rows: Vec<&str> = metrics.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("5")));
    let episodes = std::fs::read_to_string(out.join("episodes.csv")).unwrap();
    assert_eq!(episodes.lines().count(), 1 + 25);
    assert!(out.join("config.txt").exists() && out.join("report.txt").exists());
}

#[test]
fn pf_suite_emits_ideal_and_perturbed_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("agent");
    train(&run, "0", &[]);
    let ck = run.join("checkpoint.txt");
    let stdout = ok(&["eval", "--checkpoint", ck.to_str().unwrap(), "--suite", "pf"], tmp.path());
    let out = tmp.path().join("eval-pf");
    assert!(stdout.contains("sensitivity"));
    let csv = std::fs::read_to_string(out.join("sensitivity.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "agent,lambda_r,ideal_error_m,perturbed_error_m,sensitivity_pct");
    assert!(csv.lines().nth(1).unwrap().starts_with("agent,0.9,"));
    assert!(out.join("trajectories/agent-ideal.csv").exists());
    assert!(out.join("trajectories/agent-perturbed.csv").exists());
}

#[test]
fn eval_rejects_unknown_suite_and_bad_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let o = auv(&["eval", "--checkpoint", "x", "--suite", "maze"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let p = tmp.path().join("ck.txt");
    let mut cfg = ExperimentConfig::defaults();
    cfg.env.sonar.rows = 5;
    let model = initial_model(&cfg.env, &cfg.train);
    Checkpoint::new(model).save(&p).unwrap();
    let o = auv(&["eval", "--checkpoint", p.to_str().unwrap(), "--suite", "pf"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("observations"));
    std::fs::write(&p, "garbage").unwrap();
    assert_eq!(auv(&["eval", "--checkpoint", p.to_str().unwrap(), "--suite", "pf"], tmp.path()).status.code(), Some(1));
}

#[test]
fn scenario_dumps_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["scenario", "beginner", "--seed", "3"], tmp.path());
    let dir = tmp.path().join("scenario-beginner-3");
    assert_eq!(std::fs::read_to_string(dir.join("obstacles.txt")).unwrap(), "");

    ok(&["scenario", "intermediate", "--seed", "4"], tmp.path());
    let dir = tmp.path().join("scenario-intermediate-4");
    let (path, obstacles) = read_scene(&dir).unwrap();
    let original = make_scenario(Difficulty::Intermediate, 4);
    assert_eq!(path.waypoints(), original.waypoints());
    assert_eq!(obstacles, original.obstacles);
    assert_eq!(obstacles.len(), 1);
    let mid = path.position_at(path.length() / 2.0);
    assert!((obstacles[0].center - mid).norm() < 1e-6);
    assert!(std::fs::read_to_string(dir.join("path.csv")).unwrap().lines().count() > 100);

    for special in ["dead-end", "stacked-vertical", "pure-pf-current"] {
        ok(&["scenario", special], tmp.path());
    }
    assert!(!auv(&["scenario", "labyrinth"], tmp.path()).status.success());
}
