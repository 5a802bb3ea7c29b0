use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dispersive_bench::{bbm, elliptic_matrix, eval, svaerd_kalisch};
use dispersive_core::linear_solve::{factor, solve};
use dispersive_core::SkVariant;

const SIZES: [usize; 2] = [512, 2048];

fn rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("rhs");
    for n in SIZES {
        let (model, u) = bbm(n, 4);
        let mut du = vec![0.0; u.len()];
        group.bench_with_input(BenchmarkId::new("bbm_central_wide", n), &n, |b, _| {
            b.iter(|| eval(&model, black_box(&u), &mut du))
        });
        for (name, variant) in [
            ("sk_central_split", SkVariant::PeriodicCentralSplit),
            ("sk_upwind", SkVariant::PeriodicUpwind),
        ] {
            let (model, u) = svaerd_kalisch(n, 4, variant);
            let mut du = vec![0.0; u.len()];
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| eval(&model, black_box(&u), &mut du))
            });
        }
    }
    group.finish();
}

fn banded_lu(c: &mut Criterion) {
    let mut group = c.benchmark_group("banded_lu");
    for n in SIZES {
        let a = elliptic_matrix(n, 6);
        group.bench_with_input(BenchmarkId::new("factor", n), &a, |b, a| {
            b.iter(|| factor(black_box(a)).unwrap())
        });
        let f = factor(&a).unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        group.bench_with_input(BenchmarkId::new("solve", n), &rhs, |b, r| {
            b.iter(|| solve(&f, black_box(r)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, rhs, banded_lu);
criterion_main!(benches);
