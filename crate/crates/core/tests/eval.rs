use auv_core::dynamics::VehicleState;
use auv_core::environment::*;
use auv_core::eval::*;
use auv_core::exec::Execution;
use auv_core::perception::{scan, Obstacle, SonarConfig};
use nalgebra::Vector3;

fn ray_sphere(origin: &Vector3<f64>, dir: &Vector3<f64>, o: &Obstacle) -> bool {
    let d = dir.normalize();
    let oc = origin - o.center;
    let b = oc.dot(&d);
    let c = oc.norm_squared() - o.radius * o.radius;
    let disc = b * b - c;
    disc >= 0.0 && (-b + disc.sqrt()) >= 0.0
}

fn hits_any(origin: &Vector3<f64>, dir: &Vector3<f64>, obstacles: &[Obstacle]) -> bool {
    obstacles.iter().any(|o| ray_sphere(origin, dir, o))
}

fn unit(az: f64, el: f64) -> Vector3<f64> {
    Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
}

#[test]
fn always_collide_policy_collides_on_intermediate() {
    let m = run_quantitative(&los_autopilot(8.0), &EnvConfig::default(), Difficulty::Intermediate, 8, 77, Execution::Parallel).unwrap();
    assert_eq!(m.episodes, 8);
    assert_eq!(m.collision_rate, 100.0);
    assert_eq!(m.success_rate, 0.0);
}

#[test]
fn path_following_oracle_on_beginner() {
    let m = run_quantitative(&los_autopilot(8.0), &EnvConfig::default(), Difficulty::Beginner, 10, 900, Execution::Parallel).unwrap();
    assert_eq!(m.success_rate, 100.0);
    assert!(m.avg_tracking_error < 0.5, "{}", m.avg_tracking_error);
    assert!(m.success_rate + m.collision_rate <= 100.0);
}

#[test]
fn execution_modes_agree() {
    let cfg = EnvConfig::default();
    let p = los_autopilot(4.0);
    let a = run_episodes(&p, &cfg, Difficulty::Advanced, 4, 5, Execution::Sequential).unwrap();
    let b = run_episodes(&p, &cfg, Difficulty::Advanced, 4, 5, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![5, 6, 7, 8]);
}

#[test]
fn tracking_error_is_recomputable_from_trajectory_log() {
    let cfg = EnvConfig {
        record_trajectory: true,
        ..Default::default()
    };
    let o = run_scenario(&los_autopilot(4.0), &cfg, make_scenario(Difficulty::Beginner, 3)).unwrap();
    let csv = trajectory_to_csv(&o.trajectory);
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (ce, ve) = (col("cross_track"), col("vertical_track"));
    let mut sum = 0.0;
    let mut n = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        sum += f[ce].hypot(f[ve]);
        n += 1;
    }
    assert_eq!(n, o.steps);
    assert_eq!(sum / n as f64, o.avg_tracking_error);
}

#[test]
fn pure_pf_scenario_is_fixed_and_curved_in_both_planes() {
    let a = make_pure_pf_scenario(false);
    let b = make_pure_pf_scenario(false);
    assert_eq!(a.waypoints(), b.waypoints());
    assert!(a.waypoints().len() >= 5 && a.obstacles.is_empty());
    let pts = a.path.sample(0.5);
    let span = |f: fn(&auv_core::path::PathPoint) -> f64| {
        let v: Vec<f64> = pts.iter().map(f).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    assert!(span(|p| p.azimuth) > 0.3);
    assert!(span(|p| p.elevation) > 0.1);
    // Both the horizontal and the vertical tangent component change sign.
    assert!(pts.iter().any(|p| p.azimuth > 0.1) && pts.iter().any(|p| p.azimuth < -0.1));
    assert!(pts.iter().any(|p| p.elevation > 0.05) && pts.iter().any(|p| p.elevation < -0.05));
}

#[test]
fn pure_pf_current_is_active() {
    let mut env = Environment::new(EnvConfig::default()).unwrap();
    env.reset(make_pure_pf_scenario(true));
    let v = env.current().unwrap().velocity_ned();
    assert!((v.norm() - 0.5).abs() < 1e-12);
    env.reset(make_pure_pf_scenario(false));
    assert_eq!(env.current().unwrap().velocity_ned().norm(), 0.0);
}

#[test]
fn dead_end_shell_blocks_forward_and_opens_backward() {
    let s = make_dead_end_scenario();
    let centre = Vector3::from(DEAD_END_CENTRE);
    assert!(s.obstacles.iter().all(|o| ((o.center - centre).norm() - DEAD_END_RADIUS).abs() < 1e-9));
    assert!(s.obstacles.iter().all(|o| o.center.x >= centre.x));
    let steps = 90;
    for i in 0..=steps {
        for j in 0..(4 * steps) {
            let el = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / steps as f64;
            let az = std::f64::consts::TAU * j as f64 / (4 * steps) as f64;
            let d = unit(az, el);
            if d.x >= 0.0 {
                assert!(hits_any(&centre, &d, &s.obstacles), "gap towards {d:?}");
            } else if d.x < -0.15 {
                assert!(!hits_any(&centre, &d, &s.obstacles), "opening blocked towards {d:?}");
            }
        }
    }
    // Straight continuations of the path tangent from anywhere inside the mouth.
    for y in [-10.0, -4.0, 0.0, 4.0, 10.0] {
        for z in [-10.0, 0.0, 10.0] {
            assert!(hits_any(&Vector3::new(60.0, y, z), &Vector3::x(), &s.obstacles));
        }
    }
}

#[test]
fn dead_end_first_contact_is_at_sonar_range() {
    let s = make_dead_end_scenario();
    let cfg = SonarConfig::default();
    let mut x = 0.0;
    let contact = loop {
        let state = VehicleState {
            position: Vector3::new(x, 0.0, 0.0),
            ..Default::default()
        };
        let img = scan(&state, &s.obstacles, &cfg);
        let nearest = img.distances().iter().cloned().fold(f64::INFINITY, f64::min);
        if nearest < cfg.range {
            break (x, nearest);
        }
        x += 0.25;
        assert!(x < 100.0);
    };
    assert!(contact.1 > cfg.range - 1.0, "{contact:?}");
    let surface = s.obstacles.iter().map(|o| o.surface_distance(&Vector3::new(contact.0, 0.0, 0.0))).fold(f64::INFINITY, f64::min);
    assert!(surface <= cfg.range && surface > cfg.range - 2.0, "{surface}");
}

/// Smallest offset along `axis` at which a line parallel to the path clears
/// every sphere.
fn detour(obstacles: &[Obstacle], axis: Vector3<f64>) -> f64 {
    (0..400)
        .map(|k| k as f64 * 0.1)
        .find(|&d| {
            [d, -d].iter().all(|&s| {
                let origin = Vector3::new(0.0, 0.0, 0.0) + s * axis;
                !hits_any(&origin, &Vector3::x(), obstacles)
            })
        })
        .unwrap()
}

#[test]
fn stacked_scenarios_leave_the_short_way_on_the_other_axis() {
    let h = make_stacked_scenario(StackDirection::Horizontal);
    let v = make_stacked_scenario(StackDirection::Vertical);
    for s in [&h, &v] {
        assert_eq!(s.obstacles.len(), STACK_SPHERES);
        assert!(hits_any(&Vector3::zeros(), &Vector3::x(), &s.obstacles));
        for w in s.obstacles.windows(2) {
            let gap = (w[1].center - w[0].center).norm() - 2.0 * STACK_SPHERE_RADIUS;
            assert!(gap.abs() < 1e-12);
        }
    }
    let (hy, hz) = (detour(&h.obstacles, Vector3::y()), detour(&h.obstacles, Vector3::z()));
    let (vy, vz) = (detour(&v.obstacles, Vector3::y()), detour(&v.obstacles, Vector3::z()));
    assert!(hz < hy, "horizontal stack: vertical {hz} lateral {hy}");
    assert!(vy < vz, "vertical stack: lateral {vy} vertical {vz}");
    assert!((hz - STACK_SPHERE_RADIUS).abs() < 0.11);
    assert!((vy - STACK_SPHERE_RADIUS).abs() < 0.11);
}

#[test]
fn special_scenarios_are_deterministic() {
    let a = make_dead_end_scenario();
    let b = make_dead_end_scenario();
    assert_eq!(a.obstacles, b.obstacles);
    assert_eq!(
        make_stacked_scenario(StackDirection::Vertical).obstacles,
        make_stacked_scenario(StackDirection::Vertical).obstacles
    );
    assert!("diagonal".parse::<StackDirection>().is_err());
}

#[test]
fn constructors_satisfy_difficulty_invariants() {
    let p = ScenarioParams::default();
    for d in Difficulty::ALL {
        for seed in 0..100 {
            make_scenario(d, seed).check_invariants(&p).unwrap();
        }
    }
}
