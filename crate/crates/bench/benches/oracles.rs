use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qverify_bench::ramp;
use qverify_core::bounds::{certification_sample_size, kl_divergence, verification_sample_size};
use qverify_core::experiments::{exact_certification_pass_probability, exact_pass_probability};
use std::hint::black_box;

fn pass_dp(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_pass_probability");
    for n in [100, 1000, 5000] {
        let probs = ramp(0.95, 0.03, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &probs, |b, probs| {
            b.iter(|| exact_pass_probability(black_box(probs), 0.98).unwrap())
        });
    }
    group.finish();
}

fn certification_dp(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_certification_pass_probability");
    group.sample_size(10);
    for n in [50, 150, 300] {
        let probs = ramp(0.95, 0.03, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &probs, |b, probs| {
            b.iter(|| exact_certification_pass_probability(black_box(probs), 0.5, 0.98).unwrap())
        });
    }
    group.finish();
}

fn planners(c: &mut Criterion) {
    c.bench_function("kl_divergence", |b| {
        b.iter(|| kl_divergence(black_box(0.98), black_box(0.95)).unwrap())
    });
    c.bench_function("verification_sample_size", |b| {
        b.iter(|| verification_sample_size(1.0, black_box(0.02), black_box(0.05), 0.01).unwrap())
    });
    c.bench_function("certification_sample_size", |b| {
        b.iter(|| certification_sample_size(black_box(0.5), 1.0, 0.02, black_box(0.05), 0.01).unwrap())
    });
}

criterion_group!(benches, pass_dp, certification_dp, planners);
criterion_main!(benches);
