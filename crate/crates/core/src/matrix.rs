//! Per-level conversion matrices and the wavelet ↔ multipole maps.
//!
//! Only rows with `q >= 0` are stored, split into a real and an imaginary
//! sparse store with disjoint keys. Rows with `q < 0` are the conjugates of
//! the stored rows, and the entry at `(k_y, k_x, k_z)` is `(-i)^q` times the
//! conjugate of the entry at `(k_x, k_y, k_z)`. The build evaluates only
//! `k_x <= k_y` and materializes the mirrored half by that index transform.

pub mod format;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::moments::MomentTable;
use crate::series::{
    axis_of, eval_e0, eval_e0_laplace, leading_term, oddity_zero, Axis, SeriesError, SeriesParams, Tolerances,
    WaveletIndex,
};
use crate::specfun::{default_lambda0, normalized_legendre_all, tri_index, tri_len};
use crate::xprec::WideReal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("level {level}: {source}")]
    Series { level: u32, source: SeriesError },
    #[error("invalid build parameters: {0}")]
    InvalidParams(String),
    #[error("block level {block} does not match matrix level {matrix}")]
    LevelMismatch { block: u32, matrix: u32 },
    #[error("multipole degree {local} exceeds matrix degree {matrix}")]
    DegreeMismatch { local: u32, matrix: u32 },
}

/// Row `(p, q >= 0)` and column `k` of a stored entry. Orders as
/// `(p, q, k_x, k_y, k_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntryKey {
    pub p: u32,
    pub q: u32,
    pub k: WaveletIndex,
}

impl EntryKey {
    pub fn new(p: u32, q: u32, k: WaveletIndex) -> Self {
        EntryKey { p, q, k }
    }
}

/// Which elements a build drops as effective zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroRule {
    /// Keep every element that passes the oddity rule.
    Keep,
    /// Drop elements whose converged magnitude is below the threshold.
    #[default]
    Magnitude,
    /// Also drop elements whose first admissible term is below the
    /// threshold, as if summation stopped there. This is the
    /// moment-condition estimate of the sparsity pattern; it can drop
    /// elements that are far from negligible when that term cancels.
    LeadingTerm,
}

impl std::str::FromStr for ZeroRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "keep" => Ok(ZeroRule::Keep),
            "magnitude" => Ok(ZeroRule::Magnitude),
            "leading-term" => Ok(ZeroRule::LeadingTerm),
            other => Err(format!("unknown zero rule {other:?}")),
        }
    }
}

/// Parameters of one per-level build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildSpec {
    pub level: u32,
    pub lambda: f64,
    pub lambda0: f64,
    pub p_max: u32,
    pub k_max: u32,
    pub tol: Tolerances,
    /// Effective-zero handling, applied to the level-0 values against
    /// [`BuildSpec::drop_threshold`].
    pub zero_rule: ZeroRule,
}

impl BuildSpec {
    /// Level-0 spec with default tolerances and `λ0` (`λ`, or 1 at `λ = 0`).
    pub fn new(lambda: f64, p_max: u32, k_max: u32) -> Self {
        BuildSpec {
            level: 0,
            lambda,
            lambda0: default_lambda0(lambda),
            p_max,
            k_max,
            tol: Tolerances::default(),
            zero_rule: ZeroRule::Magnitude,
        }
    }

    pub fn at_level(mut self, level: u32) -> Self {
        self.level = level;
        self
    }

    pub fn with_lambda0(mut self, lambda0: f64) -> Self {
        self.lambda0 = lambda0;
        self
    }

    pub fn with_zero_rule(mut self, rule: ZeroRule) -> Self {
        self.zero_rule = rule;
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// `λ_n = λ / 2^n`.
    pub fn lambda_n(&self) -> f64 {
        self.lambda / 2f64.powi(self.level as i32)
    }

    /// Magnitude below which an element counts as an effective zero:
    /// `ε_a`, floored at the double-precision unit roundoff `2^-52`.
    pub fn drop_threshold(&self) -> f64 {
        self.tol.eps_a.max(f64::EPSILON)
    }

    /// Moment table large enough for this build.
    pub fn table(&self) -> Result<MomentTable, MatrixError> {
        MomentTable::for_series(self.p_max, self.k_max, self.tol.m_max)
            .map_err(|e| MatrixError::InvalidParams(e.to_string()))
    }
}

/// Sparse conversion matrix `E^{(p,q)}_k(n, λ)` for one level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversionMatrix {
    pub level: u32,
    pub lambda: f64,
    pub lambda0: f64,
    pub p_max: u32,
    pub k_max: u32,
    pub eps_a: f64,
    pub eps_r: f64,
    real: Vec<(EntryKey, f64)>,
    imag: Vec<(EntryKey, f64)>,
}

/// Entry counts in the layout of the sparsity tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatrixStats {
    pub total: usize,
    pub oddity_real: usize,
    pub oddity_imag: usize,
    pub real_nonzero: usize,
    pub imag_nonzero: usize,
    pub additional_real_zero: usize,
    pub additional_imag_zero: usize,
}

/// Slot counts for `p <= p_max`, `0 <= q <= p`, `k <= (k_max, k_max, k_max)`:
/// `(total, real candidates, imaginary candidates)` under the oddity rule.
pub fn oddity_counts(p_max: u32, k_max: u32) -> (usize, usize, usize) {
    let (mut total, mut re, mut im) = (0, 0, 0);
    for p in 0..=p_max {
        for q in 0..=p as i32 {
            for k in WaveletIndex::all(k_max) {
                total += 1;
                if oddity_zero(p, q, k) {
                    continue;
                }
                match axis_of(k) {
                    Axis::Real => re += 1,
                    Axis::Imaginary => im += 1,
                }
            }
        }
    }
    (total, re, im)
}

/// `(-i)^q conj(z)`, exact.
fn swap_transform(q: u32, z: Complex64) -> Complex64 {
    let c = z.conj();
    match q % 4 {
        0 => c,
        1 => Complex64::new(c.im, -c.re),
        2 => -c,
        _ => Complex64::new(-c.im, c.re),
    }
}

fn on_axis(axis: Axis, v: f64) -> Complex64 {
    match axis {
        Axis::Real => Complex64::new(v, 0.0),
        Axis::Imaginary => Complex64::new(0.0, v),
    }
}

/// `2^{-3n/2}` in wide precision.
fn level_factor(level: u32) -> WideReal {
    let half = 3 * level as i32;
    let v = WideReal::ONE.ldexp(-(half / 2));
    if half % 2 == 1 {
        v / WideReal::from_f64(2.0).sqrt()
    } else {
        v
    }
}

type Row = Vec<(EntryKey, Axis, f64)>;

fn build_row(
    p: u32,
    q: u32,
    spec: &BuildSpec,
    params: &SeriesParams,
    table: &MomentTable,
) -> Result<Row, SeriesError> {
    let qi = q as i32;
    let scale = level_factor(spec.level);
    let laplace = spec.lambda == 0.0;
    // λ = 0 rows additionally carry the homogeneity factor 2^{-np}.
    let scale = if laplace {
        scale.ldexp(-((spec.level * p) as i32))
    } else {
        scale
    };
    let mut row = Row::new();
    for kx in 0..=spec.k_max {
        for ky in kx..=spec.k_max {
            for kz in 0..=spec.k_max {
                let k = WaveletIndex::new(kx, ky, kz);
                if oddity_zero(p, qi, k) {
                    continue;
                }
                let value = if laplace {
                    if p < k.total() {
                        continue;
                    }
                    eval_e0_laplace(p, qi, k, table)?
                } else {
                    let (v, _) = eval_e0(p, qi, k, params, table)?;
                    let thr = spec.drop_threshold();
                    let drop = match spec.zero_rule {
                        ZeroRule::Keep => false,
                        ZeroRule::Magnitude => v.value.abs().to_f64() < thr,
                        ZeroRule::LeadingTerm => {
                            v.value.abs().to_f64() < thr
                                || leading_term(p, qi, k, params, table)?.abs().to_f64() < thr
                        }
                    };
                    if drop {
                        continue;
                    }
                    v
                };
                let v = (value.value * scale).to_f64();
                row.push((EntryKey::new(p, q, k), value.axis, v));
                if kx != ky {
                    let mirrored = swap_transform(q, on_axis(value.axis, v));
                    let mk = k.swapped();
                    let axis = axis_of(mk);
                    let mv = match axis {
                        Axis::Real => mirrored.re,
                        Axis::Imaginary => mirrored.im,
                    };
                    row.push((EntryKey::new(p, q, mk), axis, mv));
                }
            }
        }
    }
    Ok(row)
}

/// Builds `E^{(p,q)}_k(n, λ) = 2^{-3n/2} E^{(p,q)}_k(0, λ/2^n)` for all
/// `q >= 0` keys that pass the oddity rule.
///
/// At `λ = 0` the elements are the solid-harmonic projections, stored for
/// every key with `p >= k_x + k_y + k_z`; no dropping applies there.
pub fn build_matrix(spec: &BuildSpec, table: &MomentTable) -> Result<ConversionMatrix, MatrixError> {
    let params = SeriesParams::new(spec.lambda_n(), spec.lambda0, spec.tol)
        .map_err(|e| MatrixError::InvalidParams(e.to_string()))?;
    let need_l = 2 * spec.tol.m_max + spec.p_max;
    if table.k_max() < spec.k_max || table.l_max() < need_l {
        return Err(MatrixError::Series {
            level: spec.level,
            source: SeriesError::TableTooSmall {
                need_k: spec.k_max,
                need_l,
                have_k: table.k_max(),
                have_l: table.l_max(),
            },
        });
    }
    let rows: Vec<(u32, u32)> = (0..=spec.p_max)
        .flat_map(|p| (0..=p).map(move |q| (p, q)))
        .collect();
    let results: Vec<Result<Row, SeriesError>> = rows
        .par_iter()
        .map(|&(p, q)| build_row(p, q, spec, &params, table))
        .collect();
    let mut real = Vec::new();
    let mut imag = Vec::new();
    for r in results {
        let row = r.map_err(|source| MatrixError::Series {
            level: spec.level,
            source,
        })?;
        for (key, axis, v) in row {
            match axis {
                Axis::Real => real.push((key, v)),
                Axis::Imaginary => imag.push((key, v)),
            }
        }
    }
    Ok(ConversionMatrix::from_parts(spec, real, imag))
}

impl ConversionMatrix {
    /// Assembles a matrix from unsorted entry lists.
    pub fn from_parts(
        spec: &BuildSpec,
        mut real: Vec<(EntryKey, f64)>,
        mut imag: Vec<(EntryKey, f64)>,
    ) -> Self {
        real.sort_by_key(|e| e.0);
        imag.sort_by_key(|e| e.0);
        ConversionMatrix {
            level: spec.level,
            lambda: spec.lambda,
            lambda0: spec.lambda0,
            p_max: spec.p_max,
            k_max: spec.k_max,
            eps_a: spec.tol.eps_a,
            eps_r: spec.tol.eps_r,
            real,
            imag,
        }
    }

    /// Sorted real store.
    pub fn real_entries(&self) -> &[(EntryKey, f64)] {
        &self.real
    }

    /// Sorted imaginary store (values are the coefficients of `i`).
    pub fn imag_entries(&self) -> &[(EntryKey, f64)] {
        &self.imag
    }

    pub fn len(&self) -> usize {
        self.real.len() + self.imag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All stored entries as `(key, complex value)`, real store first.
    pub fn entries(&self) -> impl Iterator<Item = (EntryKey, Complex64)> + '_ {
        self.real
            .iter()
            .map(|&(k, v)| (k, Complex64::new(v, 0.0)))
            .chain(self.imag.iter().map(|&(k, v)| (k, Complex64::new(0.0, v))))
    }

    fn lookup(&self, key: &EntryKey) -> Complex64 {
        if let Ok(i) = self.real.binary_search_by_key(key, |e| e.0) {
            return Complex64::new(self.real[i].1, 0.0);
        }
        if let Ok(i) = self.imag.binary_search_by_key(key, |e| e.0) {
            return Complex64::new(0.0, self.imag[i].1);
        }
        Complex64::new(0.0, 0.0)
    }

    /// `E^{(p,q)}_k` for either sign of `q`; absent keys are zero.
    pub fn reconstruct_entry(&self, p: u32, q: i32, k: WaveletIndex) -> Complex64 {
        let v = self.lookup(&EntryKey::new(p, q.unsigned_abs(), k));
        if q < 0 {
            v.conj()
        } else {
            v
        }
    }

    /// `M_p^q = Σ_k E^{(p,q)}_k s^k`, optionally times the kernel constant `8λ`.
    pub fn forward(
        &self,
        block: &WaveletBlock,
        include_kernel_constant: bool,
    ) -> Result<MultipoleVector, MatrixError> {
        if block.level != self.level {
            return Err(MatrixError::LevelMismatch {
                block: block.level,
                matrix: self.level,
            });
        }
        let mut out = MultipoleVector::zeros(self.p_max);
        for (key, e) in self.entries() {
            let Some(s) = block.get(key.k) else {
                continue;
            };
            let (p, q) = (key.p, key.q as i32);
            out.coeffs[tri_index(p, q)] += e * s;
            if q > 0 {
                out.coeffs[tri_index(p, -q)] += e.conj() * s;
            }
        }
        if include_kernel_constant && self.lambda > 0.0 {
            let c = 8.0 * self.lambda;
            for v in out.coeffs.iter_mut() {
                *v *= c;
            }
        }
        Ok(out)
    }

    /// `s^k = Σ_{(p,q)} conj(E^{(p,q)}_k) L_p^q` over both signs of `q`, in
    /// [`WaveletIndex::flat`] order for this matrix's `k_max`.
    pub fn adjoint(&self, local: &MultipoleVector) -> Result<Vec<Complex64>, MatrixError> {
        if local.p_max > self.p_max {
            return Err(MatrixError::DegreeMismatch {
                local: local.p_max,
                matrix: self.p_max,
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); (self.k_max as usize + 1).pow(3)];
        for (key, e) in self.entries() {
            if key.p > local.p_max {
                continue;
            }
            let (p, q) = (key.p, key.q as i32);
            let slot = &mut out[key.k.flat(self.k_max)];
            *slot += e.conj() * local.coeffs[tri_index(p, q)];
            if q > 0 {
                *slot += e * local.coeffs[tri_index(p, -q)];
            }
        }
        Ok(out)
    }

    pub fn stats(&self) -> MatrixStats {
        let (total, oddity_real, oddity_imag) = oddity_counts(self.p_max, self.k_max);
        MatrixStats {
            total,
            oddity_real,
            oddity_imag,
            real_nonzero: self.real.len(),
            imag_nonzero: self.imag.len(),
            additional_real_zero: oddity_real - self.real.len(),
            additional_imag_zero: oddity_imag - self.imag.len(),
        }
    }
}

/// Multiwavelet coefficients `s^k_{(n,l)}` of one box.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBlock {
    pub level: u32,
    pub translation: [u32; 3],
    pub k_max: u32,
    /// Indexed by [`WaveletIndex::flat`].
    pub coeffs: Vec<Complex64>,
}

impl WaveletBlock {
    /// All-zero block; `None` if a translation component is `>= 2^level`.
    pub fn zeros(level: u32, translation: [u32; 3], k_max: u32) -> Option<Self> {
        if level >= 31 || translation.iter().any(|&l| l >= 1 << level) {
            return None;
        }
        Some(WaveletBlock {
            level,
            translation,
            k_max,
            coeffs: vec![Complex64::new(0.0, 0.0); (k_max as usize + 1).pow(3)],
        })
    }

    pub fn get(&self, k: WaveletIndex) -> Option<Complex64> {
        (k.max_component() <= self.k_max).then(|| self.coeffs[k.flat(self.k_max)])
    }

    pub fn set(&mut self, k: WaveletIndex, v: Complex64) {
        let i = k.flat(self.k_max);
        self.coeffs[i] = v;
    }

    /// Edge length `2^{-n}` of the box.
    pub fn width(&self) -> f64 {
        2f64.powi(-(self.level as i32))
    }

    /// Lower corner `2^{-n} l`.
    pub fn corner(&self) -> [f64; 3] {
        let w = self.width();
        self.translation.map(|l| l as f64 * w)
    }

    pub fn center(&self) -> [f64; 3] {
        let w = self.width();
        self.translation.map(|l| (l as f64 + 0.5) * w)
    }

    /// Half the box diagonal.
    pub fn radius(&self) -> f64 {
        0.5 * self.width() * 3f64.sqrt()
    }

    /// Whether `x` lies in the closed box.
    pub fn contains(&self, x: [f64; 3]) -> bool {
        let c = self.corner();
        let w = self.width();
        (0..3).all(|i| x[i] >= c[i] && x[i] <= c[i] + w)
    }

    /// `Σ_k s^k φ^k_{(n,l)}(x)` for `x` in the box.
    pub fn eval(&self, x: [f64; 3]) -> Complex64 {
        let c = self.center();
        let w = self.width();
        let t: Vec<Vec<f64>> = (0..3)
            .map(|i| normalized_legendre_all(self.k_max, 2.0 * (x[i] - c[i]) / w))
            .collect();
        let norm = (2.0 / w).powf(1.5);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in WaveletIndex::all(self.k_max) {
            let s = self.coeffs[k.flat(self.k_max)];
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            acc += s * (t[0][k.kx as usize] * t[1][k.ky as usize] * t[2][k.kz as usize]);
        }
        acc * norm
    }

    /// Whether every coefficient is real.
    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }
}

/// Multipole or local coefficients for `p <= p_max`, `-p <= q <= p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipoleVector {
    pub p_max: u32,
    /// Indexed by [`tri_index`].
    pub coeffs: Vec<Complex64>,
}

impl MultipoleVector {
    pub fn zeros(p_max: u32) -> Self {
        MultipoleVector {
            p_max,
            coeffs: vec![Complex64::new(0.0, 0.0); tri_len(p_max)],
        }
    }

    pub fn get(&self, p: u32, q: i32) -> Complex64 {
        self.coeffs[tri_index(p, q)]
    }

    pub fn set(&mut self, p: u32, q: i32, v: Complex64) {
        self.coeffs[tri_index(p, q)] = v;
    }

    /// Truncation to degree `p_max`.
    pub fn truncated(&self, p_max: u32) -> Self {
        let p_max = p_max.min(self.p_max);
        MultipoleVector {
            p_max,
            coeffs: self.coeffs[..tri_len(p_max)].to_vec(),
        }
    }

    /// `max |M_p^{-q} - conj(M_p^q)|`.
    pub fn conjugate_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in 0..=self.p_max {
            for q in 1..=p as i32 {
                worst = worst.max((self.get(p, -q) - self.get(p, q).conj()).norm());
            }
        }
        worst
    }

    /// `Σ conj(a) b` over all coefficients.
    pub fn inner(&self, other: &MultipoleVector) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}
