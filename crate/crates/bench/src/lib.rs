//! Shared inputs for the benchmark suites.

use mwxe_core::matrix::BuildSpec;
use mwxe_core::series::{oddity_zero, swap_zero};
use mwxe_core::WaveletIndex;

/// Matrix sizes used throughout the suites.
pub const P_MAX: u32 = 10;
pub const K_MAX: u32 = 10;

pub fn spec(lambda: f64) -> BuildSpec {
    BuildSpec::new(lambda, P_MAX, K_MAX)
}

/// A handful of admissible keys spanning low and high degree.
pub fn sample_keys() -> Vec<(u32, i32, WaveletIndex)> {
    [
        (0, 0, WaveletIndex::new(0, 0, 0)),
        (2, 1, WaveletIndex::new(1, 0, 1)),
        (4, 2, WaveletIndex::new(2, 0, 2)),
        (10, 3, WaveletIndex::new(7, 2, 5)),
    ]
    .into_iter()
    .filter(|&(p, q, k)| !oddity_zero(p, q, k) && !swap_zero(p, q, k))
    .collect()
}
