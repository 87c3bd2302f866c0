use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pmbm_core::{murty_kbest, solve_optimal, CostMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn tracking_matrix(rows: usize, tracks: usize, seed: u64) -> CostMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let old: Vec<Vec<f64>> = (0..rows)
        .map(|_| {
            (0..tracks)
                .map(|_| {
                    if rng.random_bool(0.3) {
                        rng.random_range(-8.0..4.0)
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        })
        .collect();
    let diag: Vec<f64> = (0..rows).map(|_| rng.random_range(0.0..10.0)).collect();
    CostMatrix::tracking(&old, &diag)
}

fn bench_optimal(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_optimal");
    for n in [5, 20, 50] {
        let m = tracking_matrix(n, n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| solve_optimal(black_box(m)))
        });
    }
    group.finish();
}

fn bench_murty(c: &mut Criterion) {
    let mut group = c.benchmark_group("murty_kbest");
    for (n, k) in [(10, 20), (15, 200)] {
        let m = tracking_matrix(n, n, 2);
        group.bench_with_input(BenchmarkId::new(format!("{n}x{n}"), k), &m, |b, m| {
            b.iter(|| murty_kbest(black_box(m), k))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_optimal, bench_murty);
criterion_main!(benches);
