//! Scene export for external plotting.
//!
//! A scene directory holds `scenario.txt` (name, seed, current), `waypoints.txt`
//! (`x,y,z` per line), `obstacles.txt` (`x,y,z,radius` per line) and
//! `path.csv` (the interpolated path sampled every 0.5 m).

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use auv_core::environment::{make_scenario_with, CurrentMode, Difficulty, ScenarioConfig, ScenarioParams};
use auv_core::eval::{make_dead_end_scenario, make_pure_pf_scenario, make_stacked_scenario, StackDirection};
use auv_core::path::{QpmiPath, WaypointSet};
use auv_core::perception::{obstacles_from_text, obstacles_to_text, Obstacle};

pub const SPECIAL_SCENARIOS: [&str; 5] = ["pure-pf", "pure-pf-current", "dead-end", "stacked-horizontal", "stacked-vertical"];

/// A difficulty level name or one of [`SPECIAL_SCENARIOS`].
pub fn scenario_by_name(name: &str, seed: u64, params: &ScenarioParams) -> Result<ScenarioConfig> {
    if let Ok(d) = name.parse::<Difficulty>() {
        return Ok(make_scenario_with(d, seed, params));
    }
    Ok(match name {
        "pure-pf" => make_pure_pf_scenario(false),
        "pure-pf-current" => make_pure_pf_scenario(true),
        "dead-end" => make_dead_end_scenario(),
        "stacked-horizontal" => make_stacked_scenario(StackDirection::Horizontal),
        "stacked-vertical" => make_stacked_scenario(StackDirection::Vertical),
        _ => bail!(
            "unknown scenario '{name}'; expected a difficulty ({}) or one of {}",
            Difficulty::ALL.map(|d| d.name()).join(", "),
            SPECIAL_SCENARIOS.join(", ")
        ),
    })
}

fn current_text(c: &CurrentMode) -> String {
    match c {
        CurrentMode::Off => "off".into(),
        CurrentMode::Random => "random".into(),
        CurrentMode::Fixed {
            intensity,
            sideslip,
            angle_of_attack,
        } => format!("fixed {intensity} {sideslip} {angle_of_attack}"),
    }
}

pub fn write_scene(scenario: &ScenarioConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut meta = format!("name = {}\nseed = {}\n", scenario.name, scenario.seed);
    if let Some(d) = scenario.difficulty {
        let _ = writeln!(meta, "difficulty = {d}");
    }
    let _ = writeln!(meta, "current = {}", current_text(&scenario.current));
    let _ = writeln!(meta, "path_length = {}", scenario.path.length());
    let mut samples = String::from("s,x,y,z,azimuth,elevation\n");
    for p in scenario.path.sample(0.5) {
        let _ = writeln!(
            samples,
            "{},{},{},{},{},{}",
            p.arc_length, p.position.x, p.position.y, p.position.z, p.azimuth, p.elevation
        );
    }
    let files = [
        ("scenario.txt", meta),
        ("waypoints.txt", scenario.waypoints().to_text()),
        ("obstacles.txt", obstacles_to_text(&scenario.obstacles)),
        ("path.csv", samples),
    ];
    for (name, text) in files {
        std::fs::write(dir.join(name), text).with_context(|| format!("writing {name}"))?;
    }
    Ok(())
}

/// Reads back the geometry written by [`write_scene`].
pub fn read_scene(dir: &Path) -> Result<(QpmiPath, Vec<Obstacle>)> {
    let read = |name: &str| std::fs::read_to_string(dir.join(name)).with_context(|| format!("reading {name}"));
    let waypoints = WaypointSet::from_text(&read("waypoints.txt")?).map_err(|e| anyhow!("waypoints.txt: {e}"))?;
    let path = QpmiPath::new(waypoints).map_err(|e| anyhow!("waypoints.txt: {e}"))?;
    let obstacles = obstacles_from_text(&read("obstacles.txt")?).map_err(|e| anyhow!("obstacles.txt: {e}"))?;
    Ok((path, obstacles))
}
