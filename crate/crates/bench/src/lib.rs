//! Benchmarks of the core search routines, registered from `benches/core.rs`.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use listlab_core::geometry::{ball_volume, min_enclosing_ball, worst_case_list_size};
use listlab_core::haar::rogers_sample;
use listlab_core::lattice::DEFAULT_ENUM_CAP;
use listlab_core::{trial_rng, Lattice, SearchMode};
use nalgebra::DMatrix;
use rand::Rng;

fn random_points(n: usize, m: usize, side: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = trial_rng(seed, "bench", 0);
    (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(0.0..side)).collect())
        .collect()
}

pub fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_in_ball");
    for n in [4usize, 6, 8] {
        let mut rng = trial_rng(1, "bench-lattice", n as u64);
        let basis = DMatrix::from_fn(n, n, |i, j| {
            f64::from(u8::from(i == j)) + 0.3 * rng.random_range(-1.0..1.0)
        });
        let lattice = Lattice::from_basis(basis).unwrap();
        let center: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        // About a thousand points in the ball.
        let r = (1000.0 * lattice.det() / ball_volume(n, 1.0).unwrap()).powf(1.0 / n as f64);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                lattice
                    .count_in_ball(black_box(&center), r, false, DEFAULT_ENUM_CAP)
                    .unwrap()
            })
        });
    }
    group.finish();
}

pub fn enclosing_ball(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_enclosing_ball");
    for (n, m) in [(2usize, 100usize), (3, 100), (8, 50)] {
        let pts = random_points(n, m, 1.0, 2);
        group.bench_with_input(BenchmarkId::new(format!("n{n}"), m), &pts, |b, pts| {
            b.iter(|| min_enclosing_ball(black_box(pts)).unwrap())
        });
    }
    group.finish();
}

pub fn list_size(c: &mut Criterion) {
    let mut group = c.benchmark_group("worst_case_list_size");
    group.sample_size(20);
    for (n, m) in [(2usize, 20usize), (3, 20), (4, 16)] {
        let pts = random_points(n, m, 2.0, 3);
        group.bench_with_input(BenchmarkId::new(format!("n{n}"), m), &pts, |b, pts| {
            b.iter(|| worst_case_list_size(black_box(pts), 0.8, SearchMode::exact()).unwrap())
        });
    }
    group.finish();
}

pub fn rogers(c: &mut Criterion) {
    let mut group = c.benchmark_group("rogers_count");
    for n in [3usize, 5] {
        let mut rng = trial_rng(4, "bench-rogers", n as u64);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| {
                let s = rogers_sample(n, 0.2, &mut rng).unwrap();
                s.lattice
                    .count_in_ball(&vec![0.0; n], 1.0, true, DEFAULT_ENUM_CAP)
                    .unwrap()
            })
        });
    }
    group.finish();
}
