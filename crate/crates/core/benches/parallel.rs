//! Sequential versus rayon execution of the data-parallel hot spots.
//!
//! Run with `cargo bench -p auv-core`. Building with
//! `--no-default-features` makes both modes sequential, which gives the
//! baseline for the fallback path.

use std::hint::black_box;

use auv_core::dynamics::VehicleState;
use auv_core::environment::{los_autopilot, Difficulty, EnvConfig};
use auv_core::eval::run_episodes;
use auv_core::exec::Execution;
use auv_core::perception::{scan, Obstacle, SonarConfig};
use auv_core::ppo::{loss_and_gradient, initial_model, Actor, LossInputs, PpoConfig, RolloutBatch, TrainConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn rollouts(c: &mut Criterion) {
    let env = EnvConfig::default();
    let cfg = TrainConfig::default();
    let model = initial_model(&env, &cfg);
    let mut g = c.benchmark_group("rollout");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "4x256"), |b| {
            b.iter_batched(
                || (0..4).map(|i| Actor::new(env.clone(), 0, i).unwrap()).collect::<Vec<_>>(),
                |mut actors| exec.map_mut(&mut actors, |a| a.collect(&model, Difficulty::Intermediate, 256)),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let env = EnvConfig::default();
    let policy = los_autopilot(8.0);
    let mut g = c.benchmark_group("evaluation");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "8 episodes"), |b| {
            b.iter(|| run_episodes(&policy, &env, Difficulty::Advanced, 8, 0, exec).unwrap())
        });
    }
    g.finish();
}

fn gradient(c: &mut Criterion) {
    let env = EnvConfig::default();
    let model = initial_model(&env, &TrainConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = model.obs_dim();
    let mut batch = RolloutBatch::new(d);
    for _ in 0..2048 {
        let obs: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, lp) = model.sample(&obs, &mut rng);
        batch.values.push(model.value(&obs));
        batch.observations.extend(obs);
        batch.actions.push(a);
        batch.log_probs.push(lp);
        batch.rewards.push(rng.random_range(-1.0..0.0));
        batch.next_values.push(0.0);
        batch.cuts.push(rng.random_bool(0.01));
    }
    batch.compute_advantages(0.99, 0.95);
    let adv = batch.normalized_advantages();
    let idx: Vec<usize> = (0..batch.len()).collect();
    let inputs = LossInputs {
        batch: &batch,
        advantages: &adv,
        indices: &idx,
    };
    let cfg = PpoConfig::default();
    let mut g = c.benchmark_group("gradient");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "2048 samples"), |b| {
            b.iter(|| loss_and_gradient(black_box(&model), &inputs, &cfg, exec))
        });
    }
    g.finish();
}

fn sonar(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = SonarConfig::default();
    let obstacles: Vec<Obstacle> = (0..30)
        .map(|_| {
            let p = Vector3::new(rng.random_range(5.0..60.0), rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
            Obstacle::new(p, rng.random_range(1.0..5.0))
        })
        .collect();
    let states: Vec<VehicleState> = (0..256)
        .map(|_| VehicleState {
            position: Vector3::new(0.0, rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
            attitude: Vector3::new(0.0, rng.random_range(-0.3..0.3), rng.random_range(-0.5..0.5)),
            ..Default::default()
        })
        .collect();
    let mut g = c.benchmark_group("sonar");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "256 scans"), |b| {
            b.iter(|| exec.map(&states, |s| scan(s, &obstacles, &cfg)))
        });
    }
    g.finish();
}

criterion_group!(benches, rollouts, evaluation, gradient, sonar);
criterion_main!(benches);
