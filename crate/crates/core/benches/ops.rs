//! Benchmarks of the hot operators. Bench IDs carry the execution mode, so
//! running `cargo bench` (parallel, the default) and then
//! `cargo bench --no-default-features` (sequential) produces side-by-side
//! entries in the same criterion report.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mh_core::expr::Expr;
use mh_core::field::{build_field, PeriodicGrid};
use mh_core::halfspace::{build_harmonic_vector, poisson_extend, TimeLevels};
use mh_core::maximal::{hardy_littlewood, radial_maximal};
use mh_core::multipliers::riesz_transform;
use mh_core::musielak::{luxembourg_norm, MusielakFunction};
use mh_core::weights::BallFamily;
use std::hint::black_box;

const MODE: &str = if cfg!(feature = "parallel") { "parallel" } else { "sequential" };

fn seed(n: usize) -> (PeriodicGrid, mh_core::field::ScalarField) {
    let grid = PeriodicGrid::new(2, 4.0, n).unwrap();
    let f = build_field(&grid, &Expr::parse("exp(-|x|^2)*(1+0.5*cos(x1))").unwrap()).unwrap();
    (grid, f)
}

fn bench_riesz(c: &mut Criterion) {
    let mut group = c.benchmark_group("riesz_transform");
    for n in [64usize, 128] {
        let (_, f) = seed(n);
        group.bench_with_input(BenchmarkId::new(MODE, n), &f, |b, f| {
            b.iter(|| black_box(riesz_transform(f, 1).unwrap()))
        });
    }
    group.finish();
}

fn bench_poisson(c: &mut Criterion) {
    let mut group = c.benchmark_group("poisson_extend");
    for n in [64usize, 128] {
        let (grid, f) = seed(n);
        let levels = TimeLevels::default_for(&grid);
        group.bench_with_input(BenchmarkId::new(MODE, n), &f, |b, f| {
            b.iter(|| black_box(poisson_extend(f, &levels)))
        });
    }
    group.finish();
}

fn bench_harmonic_vector(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_harmonic_vector");
    group.sample_size(20);
    let (grid, f) = seed(64);
    let levels = TimeLevels::new(vec![0.25, 0.5, 1.0], grid.spacing()).unwrap();
    group.bench_function(BenchmarkId::new(MODE, 64), |b| {
        b.iter(|| black_box(build_harmonic_vector(&f, &levels).unwrap()))
    });
    group.finish();
}

fn bench_hardy_littlewood(c: &mut Criterion) {
    let mut group = c.benchmark_group("hardy_littlewood");
    group.sample_size(20);
    let (grid, f) = seed(64);
    let balls = BallFamily::dyadic_all_centers(&grid, 3).unwrap();
    group.bench_function(BenchmarkId::new(MODE, 64), |b| {
        b.iter(|| black_box(hardy_littlewood(&f, &balls).unwrap()))
    });
    group.finish();
}

fn bench_radial_maximal(c: &mut Criterion) {
    let mut group = c.benchmark_group("radial_maximal");
    group.sample_size(20);
    let (grid, f) = seed(64);
    let levels = TimeLevels::default_for(&grid);
    let kernel = Expr::parse("exp(-pi*|x|^2)").unwrap();
    group.bench_function(BenchmarkId::new(MODE, 64), |b| {
        b.iter(|| black_box(radial_maximal(&f, &kernel, &levels).unwrap()))
    });
    group.finish();
}

fn bench_luxembourg(c: &mut Criterion) {
    let mut group = c.benchmark_group("luxembourg_norm");
    let (_, f) = seed(64);
    let phi = MusielakFunction::separable(
        Expr::parse("1+0.5*cos(x1)").unwrap(),
        Expr::parse("t^1.2").unwrap(),
    )
    .unwrap();
    group.bench_function(BenchmarkId::new(MODE, 64), |b| {
        b.iter(|| black_box(luxembourg_norm(&phi, &f, 1e-8).unwrap()))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_riesz,
    bench_poisson,
    bench_harmonic_vector,
    bench_hardy_littlewood,
    bench_radial_maximal,
    bench_luxembourg
);
criterion_main!(benches);
