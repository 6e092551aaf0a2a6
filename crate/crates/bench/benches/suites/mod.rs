pub mod bench_matrix;
pub mod bench_moments;
pub mod bench_series;
