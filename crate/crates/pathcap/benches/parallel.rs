//! Benchmarks comparing the rayon-dispatched data-parallel paths against
//! their sequential equivalents: brute-force path-value evaluation and
//! multi-seed training batches (the sweep inner loop).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::hint::black_box;

use pathcap::data::two_gaussians;
use pathcap::network::NetworkSpec;
use pathcap::pathspace::{enumerate_all_paths, path_value};
use pathcap::testutil::random_network;
use pathcap::trainer::{init_weights, train, LossKind, Schedule, TrainConfig};

fn bench_path_enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("brute_force_path_norm");
    for (l, d, h, k) in [(3usize, 4usize, 16usize, 2usize), (4, 4, 16, 2)] {
        let spec = NetworkSpec::new(l, d, h, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = random_network(spec, &mut rng);
        let paths = enumerate_all_paths(&spec, None).unwrap();
        let id = format!("L{}_H{}_{}paths", l, h, paths.len());

        group.bench_with_input(BenchmarkId::new("sequential", &id), &paths, |b, paths| {
            b.iter(|| {
                let sum: f64 = paths.iter().map(|p| path_value(&net, p).powi(2)).sum();
                black_box(sum.sqrt())
            })
        });
        group.bench_with_input(BenchmarkId::new("rayon", &id), &paths, |b, paths| {
            b.iter(|| {
                let sum: f64 = paths.par_iter().map(|p| path_value(&net, p).powi(2)).sum();
                black_box(sum.sqrt())
            })
        });
    }
    group.finish();
}

fn bench_multi_seed_training(c: &mut Criterion) {
    let mut group = c.benchmark_group("multi_seed_training");
    group.sample_size(10);

    let spec = NetworkSpec::new(3, 4, 8, 2).unwrap();
    let train_set = two_gaussians(256, 4, 2.0, 0.8, 7);
    let cfg = TrainConfig {
        epochs: 5,
        batch_size: 32,
        learning_rate: 0.05,
        schedule: Schedule::Constant,
        seed: 0,
        loss: LossKind::CrossEntropy,
        reg: Default::default(),
    };
    let seeds: Vec<u64> = (0..8).collect();

    let run = |seed: u64| {
        let net = init_weights(&spec, seed);
        let cfg = TrainConfig { seed, ..cfg };
        train(&net, &train_set, None, &cfg).unwrap().1
    };

    group.bench_function("sequential", |b| {
        b.iter(|| {
            let records: Vec<_> = seeds.iter().map(|&s| run(s)).collect();
            black_box(records)
        })
    });
    group.bench_function("rayon", |b| {
        b.iter(|| {
            let records: Vec<_> = seeds.par_iter().map(|&s| run(s)).collect();
            black_box(records)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_path_enumeration, bench_multi_seed_training);
criterion_main!(benches);
