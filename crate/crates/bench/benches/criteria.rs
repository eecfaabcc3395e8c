use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndde::criteria::{compute_sigma, evaluate, evaluate_all, CriterionId};
use ndde_bench::{comparison, many_delays};

fn bench_criteria(c: &mut Criterion) {
    let eq = comparison(1.0, 1.0);
    c.bench_function("evaluate_all, comparison family", |b| {
        b.iter(|| evaluate_all(black_box(&eq)))
    });

    let mut group = c.benchmark_group("thm6 subsets");
    for m in [2, 6, 10] {
        let eq = many_delays(m);
        group.bench_with_input(BenchmarkId::from_parameter(m), &eq, |b, eq| {
            b.iter(|| evaluate(black_box(eq), CriterionId::Thm6))
        });
    }
    group.finish();

    c.bench_function("sigma(0.5)", |b| b.iter(|| compute_sigma(black_box(0.5)).unwrap()));
}

criterion_group!(benches, bench_criteria);
criterion_main!(benches);
