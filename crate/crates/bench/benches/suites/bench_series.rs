use criterion::{black_box, criterion_group, BenchmarkId, Criterion};
use mwxe_bench::{sample_keys, K_MAX, P_MAX};
use mwxe_core::moments::MomentTable;
use mwxe_core::series::eval_e0;
use mwxe_core::{SeriesParams, Tolerances};

fn element(c: &mut Criterion) {
    let table = MomentTable::for_series(P_MAX, K_MAX, 512).unwrap();
    let mut group = c.benchmark_group("eval_e0");
    for lambda in [1.0, 10.0, 100.0] {
        let params = SeriesParams::new(lambda, lambda, Tolerances::default()).unwrap();
        for (p, q, k) in sample_keys() {
            let id = BenchmarkId::new(format!("λ={lambda}"), format!("p={p} q={q} k=({},{},{})", k.kx, k.ky, k.kz));
            group.bench_function(id, |b| b.iter(|| eval_e0(black_box(p), q, k, &params, &table).unwrap()));
        }
    }
    group.finish();
}

criterion_group!(benches, element);
