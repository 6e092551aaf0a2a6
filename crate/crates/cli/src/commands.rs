//! The four commands. Reports go to `out`, timing and warnings to `log`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use mwxe_core::matrix::{build_matrix, format, MatrixStats, WaveletBlock};
use mwxe_core::moments::MomentTable;
use mwxe_core::oracle::{
    comparison_error, direct_potential, multipole_potential, quad_e, QuadratureSpec,
};
use mwxe_core::series::{eval_e0, oddity_zero, swap_zero};
use mwxe_core::{SeriesParams, WaveletIndex};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CliError, Outcome, RunConfig};

/// Largest `max_l rel_err` that `validate` accepts.
pub const VALIDATE_THRESHOLD: f64 = 1e-9;
/// Number of test points on the `potential` ring.
pub const RING_POINTS: usize = 16;

/// File name of the level-`n` matrix inside the output directory.
pub fn level_file_name(level: u32) -> String {
    format!("level{level}.mwxe")
}

fn write_stats(out: &mut dyn Write, prefix: &str, s: &MatrixStats) -> std::io::Result<()> {
    writeln!(out, "# {:<8}{:>8}{:>8}", "", "real", "imag")?;
    for (row, re, im) in [
        ("oddity", s.oddity_real, s.oddity_imag),
        ("nonzero", s.real_nonzero, s.imag_nonzero),
        ("zeroes", s.additional_real_zero, s.additional_imag_zero),
    ] {
        writeln!(out, "# {row:<8}{re:>8}{im:>8}")?;
    }
    for (key, v) in [
        ("TOTAL", s.total),
        ("ODDITY_REAL", s.oddity_real),
        ("ODDITY_IMAG", s.oddity_imag),
        ("REAL_NONZERO", s.real_nonzero),
        ("IMAG_NONZERO", s.imag_nonzero),
        ("ADDITIONAL_REAL_ZERO", s.additional_real_zero),
        ("ADDITIONAL_IMAG_ZERO", s.additional_imag_zero),
    ] {
        writeln!(out, "{prefix}{key}={v}")?;
    }
    Ok(())
}

pub fn build(cfg: &RunConfig, out: &mut dyn Write, log: &mut dyn Write) -> Result<Outcome, CliError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let table = cfg.build_spec(0).table()?;
    for level in 0..cfg.levels {
        let spec = cfg.build_spec(level);
        let start = Instant::now();
        let matrix = build_matrix(&spec, &table)?;
        let path = cfg.out.join(level_file_name(level));
        let file = File::create(&path).map_err(io_err(&path))?;
        format::write_matrix(&matrix, BufWriter::new(file)).map_err(io_err(&path))?;
        writeln!(log, "level {level}: {} entries in {:.3} s", matrix.len(), start.elapsed().as_secs_f64())?;

        let prefix = format!("LEVEL{level}_");
        writeln!(out, "{prefix}FILE={}", path.display())?;
        writeln!(out, "{prefix}ENTRIES={}", matrix.len())?;
        write_stats(out, &prefix, &matrix.stats())?;
    }
    Ok(Outcome::Success)
}

pub fn stats(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let path = cfg.input.as_ref().expect("checked by RunConfig::check");
    let file = File::open(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let matrix = format::read_matrix(BufReader::new(file)).map_err(|source| CliError::Format {
        path: path.clone(),
        source,
    })?;
    writeln!(out, "# {}", format::header_line(&matrix))?;
    writeln!(out, "LEVEL={}", matrix.level)?;
    writeln!(out, "LAMBDA={:?}", matrix.lambda)?;
    writeln!(out, "ENTRIES={}", matrix.len())?;
    write_stats(out, "", &matrix.stats())?;
    Ok(Outcome::Success)
}

/// Uniform sample of `(p, q, k)` with `|q| <= p <= p_max`, `k <= k_max`.
fn sample_key(rng: &mut ChaCha8Rng, p_max: u32, k_max: u32) -> (u32, i32, WaveletIndex) {
    let p = rng.gen_range(0..=p_max);
    let q = rng.gen_range(-(p as i32)..=p as i32);
    let mut c = || rng.gen_range(0..=k_max);
    let k = WaveletIndex::new(c(), c(), c());
    (p, q, k)
}

pub fn validate(cfg: &RunConfig, out: &mut dyn Write, log: &mut dyn Write) -> Result<Outcome, CliError> {
    let tol = cfg.tolerances();
    let table = MomentTable::for_series(cfg.p_max, cfg.k_max, tol.m_max)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let params = SeriesParams::new(cfg.lambda, cfg.lambda0(), tol).map_err(|e| CliError::Config(e.to_string()))?;
    let spec = QuadratureSpec {
        max_cells: cfg.max_cells,
        ..QuadratureSpec::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut structural, mut compared, mut skipped, mut series_converged) = (0usize, 0usize, 0usize, 0usize);
    let mut worst: Option<(f64, u32, i32, WaveletIndex)> = None;
    let start = Instant::now();
    for _ in 0..cfg.samples {
        let (p, q, k) = sample_key(&mut rng, cfg.p_max, cfg.k_max);
        if oddity_zero(p, q, k) || swap_zero(p, q, k) {
            structural += 1;
            continue;
        }
        let (value, _) = eval_e0(p, q, k, &params, &table).map_err(|e| CliError::series(0, e))?;
        series_converged += 1;
        let quad = quad_e(p, q, k, cfg.lambda, cfg.lambda0(), &spec)?;
        if !quad.converged {
            skipped += 1;
            continue;
        }
        compared += 1;
        let err = comparison_error(value.to_complex(), &quad, tol.eps_a);
        if worst.map_or(true, |w| err > w.0) {
            worst = Some((err, p, q, k));
        }
    }
    writeln!(log, "validate: {} samples in {:.3} s", cfg.samples, start.elapsed().as_secs_f64())?;
    if compared == 0 {
        writeln!(log, "warning: no element was compared; the check passes vacuously")?;
    }
    let max_err = worst.map_or(0.0, |w| w.0);
    let pass = max_err <= VALIDATE_THRESHOLD;
    writeln!(out, "SAMPLES={}", cfg.samples)?;
    writeln!(out, "STRUCTURAL_ZERO={structural}")?;
    writeln!(out, "SERIES_CONVERGED={series_converged}")?;
    writeln!(out, "COMPARED={compared}")?;
    writeln!(out, "ORACLE_SKIPPED={skipped}")?;
    writeln!(out, "MAX_REL_ERROR={max_err:e}")?;
    if let Some((_, p, q, k)) = worst {
        writeln!(out, "WORST_ELEMENT={p},{q},{},{},{}", k.kx, k.ky, k.kz)?;
    }
    writeln!(out, "THRESHOLD={VALIDATE_THRESHOLD:e}")?;
    writeln!(out, "RESULT={}", if pass { "PASS" } else { "FAIL" })?;
    Ok(if pass { Outcome::Success } else { Outcome::ValidationFailed })
}

/// Two orthonormal vectors spanning a random plane.
fn random_plane(rng: &mut ChaCha8Rng) -> ([f64; 3], [f64; 3]) {
    let unit = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    let mut draw = || [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let u = unit(draw());
    let w = draw();
    let d = u[0] * w[0] + u[1] * w[1] + u[2] * w[2];
    let v = unit([w[0] - d * u[0], w[1] - d * u[1], w[2] - d * u[2]]);
    (u, v)
}

pub fn potential(cfg: &RunConfig, out: &mut dyn Write, log: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let level = cfg.levels - 1;
    let side = 1u32 << level.min(31);
    let translation = [0; 3].map(|_: u32| rng.gen_range(0..side));
    let mut block = WaveletBlock::zeros(level, translation, cfg.k_max)
        .ok_or_else(|| CliError::Config(format!("level {level} is too deep")))?;
    for k in WaveletIndex::all(cfg.k_max) {
        block.set(k, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
    }
    let start = Instant::now();
    let spec = cfg.build_spec(level);
    let matrix = build_matrix(&spec, &spec.table()?)?;
    let expansion = matrix.forward(&block, true)?;

    let center = block.center();
    let radius = 3.0 * block.radius();
    let (u, v) = random_plane(&mut rng);
    let quad = QuadratureSpec {
        rel_tol: 1e-14,
        abs_tol: 1e-300,
        ..QuadratureSpec::default()
    };
    let mut ring = Vec::with_capacity(RING_POINTS);
    for i in 0..RING_POINTS {
        let t = 2.0 * std::f64::consts::PI * i as f64 / RING_POINTS as f64;
        let (c, s) = (t.cos(), t.sin());
        let x = [0, 1, 2].map(|j| center[j] + radius * (c * u[j] + s * v[j]));
        let direct = direct_potential(&block, x, cfg.lambda, &quad)?;
        if !direct.converged {
            writeln!(log, "warning: direct potential at {x:?} did not converge")?;
        }
        ring.push((x, direct.value));
    }
    writeln!(out, "LEVEL={level}")?;
    writeln!(out, "TRANSLATION={},{},{}", translation[0], translation[1], translation[2])?;
    writeln!(out, "RING_RADIUS={radius:?}")?;
    let mut last = 0.0;
    for p in 0..=cfg.p_max {
        let truncated = expansion.truncated(p);
        let mut worst = 0.0f64;
        for &(x, direct) in &ring {
            let phi = multipole_potential(&truncated, center, x, cfg.lambda, cfg.lambda0())?;
            worst = worst.max((phi - direct).norm() / direct.norm());
        }
        writeln!(out, "MAX_REL_ERROR_P{p}={worst:e}")?;
        last = worst;
    }
    writeln!(out, "MAX_REL_ERROR={last:e}")?;
    writeln!(out, "EPS_A={:e}", cfg.eps_a())?;
    writeln!(log, "potential: {:.3} s", start.elapsed().as_secs_f64())?;
    Ok(Outcome::Success)
}
