use criterion::{black_box, criterion_group, Criterion};
use mwxe_bench::spec;
use mwxe_core::matrix::{build_matrix, format};

fn build(c: &mut Criterion) {
    let table = spec(1.0).table().unwrap();
    let mut group = c.benchmark_group("build_matrix p=10 k=10");
    group.sample_size(10);
    for lambda in [0.0, 1.0, 10.0] {
        let s = spec(lambda);
        group.bench_function(format!("λ={lambda}"), |b| b.iter(|| build_matrix(black_box(&s), &table).unwrap()));
    }
    group.finish();
}

fn serialize(c: &mut Criterion) {
    let s = spec(1.0);
    let m = build_matrix(&s, &s.table().unwrap()).unwrap();
    let text = format::to_string(&m);
    c.bench_function("format write λ=1", |b| b.iter(|| format::to_string(black_box(&m))));
    c.bench_function("format read λ=1", |b| b.iter(|| format::from_str(black_box(&text)).unwrap()));
}

criterion_group!(benches, build, serialize);
