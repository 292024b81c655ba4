use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use limhodge::limitpage::{analyze, build_e1_a, build_e1_k, e2};
use limhodge::strata::validate;
use limhodge_bench::datasets;

fn pages(c: &mut Criterion) {
    let mut g = c.benchmark_group("pages");
    for (name, s) in datasets() {
        g.bench_with_input(BenchmarkId::new("validate", &name), &s, |b, s| b.iter(|| validate(black_box(s))));
        g.bench_with_input(BenchmarkId::new("e1_a", &name), &s, |b, s| b.iter(|| build_e1_a(black_box(s))));
        g.bench_with_input(BenchmarkId::new("e1_k", &name), &s, |b, s| b.iter(|| build_e1_k(black_box(s))));
        let k = build_e1_k(&s).expect("valid fixture");
        g.bench_with_input(BenchmarkId::new("e2_k", &name), &k, |b, k| b.iter(|| e2(black_box(k))));
    }
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let mut g = c.benchmark_group("analyze");
    g.sample_size(10);
    for (name, s) in datasets() {
        g.bench_with_input(BenchmarkId::from_parameter(&name), &s, |b, s| b.iter(|| analyze(black_box(s))));
    }
    g.finish();
}

criterion_group!(benches, pages, pipeline);
criterion_main!(benches);
