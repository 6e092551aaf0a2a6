use criterion::{black_box, criterion_group, Criterion};
use mwxe_core::moments::MomentTable;

fn moment_table(c: &mut Criterion) {
    c.bench_function("moment table k=10 l=1034", |b| {
        b.iter(|| MomentTable::for_series(black_box(10), black_box(10), 512).unwrap())
    });
    c.bench_function("moment table k=20 l=600", |b| {
        b.iter(|| MomentTable::build(black_box(20), black_box(600)).unwrap())
    });
}

criterion_group!(benches, moment_table);
