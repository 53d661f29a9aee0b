//! Parallel against sequential evaluation of the same sweeps. On a
//! single-core machine the two should be close; the gap is rayon overhead.

use criterion::{criterion_group, criterion_main, Criterion};

use nashkit::calculus::{sweep_faa_di_bruno, sweep_leibniz_power};
use nashkit::par;

fn leibniz(c: &mut Criterion) {
    let mut g = c.benchmark_group("leibniz_power");
    g.sample_size(10);
    g.bench_function("parallel", |b| {
        b.iter(|| sweep_leibniz_power(42, 6, 3, 3, 8))
    });
    g.bench_function("sequential", |b| {
        b.iter(|| par::with_sequential(|| sweep_leibniz_power(42, 6, 3, 3, 8)))
    });
    g.finish();
}

fn faa_di_bruno(c: &mut Criterion) {
    let mut g = c.benchmark_group("faa_di_bruno");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| sweep_faa_di_bruno(42, 6, 3, 8)));
    g.bench_function("sequential", |b| {
        b.iter(|| par::with_sequential(|| sweep_faa_di_bruno(42, 6, 3, 8)))
    });
    g.finish();
}

criterion_group!(benches, leibniz, faa_di_bruno);
criterion_main!(benches);
