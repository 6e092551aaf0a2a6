//! Series evaluation of one conversion-matrix element `E^{(p,q)}_k(0, λ_n)`.
//!
//! The element is
//!
//! ```text
//! E = C_E · Σ_m A_m(p) (λ_n²/8)^m I_m(p,q,k)
//! C_E = C_Y(p,q) / (√8 (2p+1)!!) · (λ_n / (2 λ0))^p
//! A_m(p) = (2p+1)!! / (m! (2m+2p+1)!!)
//! ```
//!
//! where `I_m` is the integral of the conjugated homogeneous polynomial
//! `conj(R_{p,m}^q) = r^{2m} r^p P_p^{|q|}(z/r) e^{-iqφ} ` against `φ^k` over
//! `[-1,1]³`. Expanding `(x - s i y)^{|q|}` and `r^{2(m+ν)}` reduces `I_m` to
//! finite sums of products of the one-dimensional moments `Î_k^l`.
//!
//! `I_m` is split as `(si)^{|q|} I⁽¹⁾ + (si)^{|q|+1} I⁽²⁾` with real parts
//! `I⁽¹⁾` (even powers of `x`) and `I⁽²⁾` (odd powers of `x`); the parity of
//! `k_x` selects which one survives, hence each element is either real or
//! purely imaginary.

use num_complex::Complex64;
use thiserror::Error;

use crate::moments::MomentTable;
use crate::xprec::WideReal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("invalid index p={p} q={q}")]
    InvalidIndex { p: u32, q: i32 },
    #[error("invalid series parameters: {0}")]
    InvalidParams(String),
    #[error(
        "moment table too small: need k<={need_k} l<={need_l}, have k<={have_k} l<={have_l}"
    )]
    TableTooSmall {
        need_k: u32,
        need_l: u32,
        have_k: u32,
        have_l: u32,
    },
    #[error("series for (p={p}, q={q}, k={k:?}) did not converge in {terms} terms (partial sum {partial:e})")]
    NonConvergence {
        p: u32,
        q: i32,
        k: WaveletIndex,
        partial: f64,
        terms: u32,
    },
}

/// Polynomial degrees `(k_x, k_y, k_z)` of a tensor-product basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct WaveletIndex {
    pub kx: u32,
    pub ky: u32,
    pub kz: u32,
}

impl WaveletIndex {
    pub const fn new(kx: u32, ky: u32, kz: u32) -> Self {
        WaveletIndex { kx, ky, kz }
    }

    #[inline]
    pub fn total(&self) -> u32 {
        self.kx + self.ky + self.kz
    }

    #[inline]
    pub fn max_component(&self) -> u32 {
        self.kx.max(self.ky).max(self.kz)
    }

    /// `(k_y, k_x, k_z)`.
    #[inline]
    pub fn swapped(&self) -> Self {
        WaveletIndex::new(self.ky, self.kx, self.kz)
    }

    /// Offset in a dense block of side `k_max + 1`, `k_z` fastest.
    #[inline]
    pub fn flat(&self, k_max: u32) -> usize {
        let n = k_max as usize + 1;
        (self.kx as usize * n + self.ky as usize) * n + self.kz as usize
    }

    /// All indices with components `<= k_max`, in [`WaveletIndex::flat`] order.
    pub fn all(k_max: u32) -> impl Iterator<Item = WaveletIndex> {
        (0..=k_max).flat_map(move |kx| {
            (0..=k_max).flat_map(move |ky| (0..=k_max).map(move |kz| WaveletIndex::new(kx, ky, kz)))
        })
    }
}

/// Summation tolerances and the hard cap on the term index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub eps_a: f64,
    pub eps_r: f64,
    pub m_max: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_a: 1e-16,
            eps_r: 1e-16,
            m_max: 512,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), SeriesError> {
        let ok = |e: f64| e > 0.0 && e < 1.0;
        if !ok(self.eps_a) || !ok(self.eps_r) || self.m_max < 1 {
            return Err(SeriesError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    /// Level-scaled decay rate `λ_n = λ / 2^n`.
    pub lambda_n: f64,
    pub lambda0: f64,
    pub tol: Tolerances,
}

impl SeriesParams {
    pub fn new(lambda_n: f64, lambda0: f64, tol: Tolerances) -> Result<Self, SeriesError> {
        tol.validate()?;
        if !(lambda_n >= 0.0 && lambda_n.is_finite() && lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(SeriesError::InvalidParams(format!(
                "lambda_n={lambda_n} lambda0={lambda0}"
            )));
        }
        Ok(SeriesParams {
            lambda_n,
            lambda0,
            tol,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Real,
    Imaginary,
}

/// A value that is either real or purely imaginary: `value` or `i·value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisValue {
    pub value: WideReal,
    pub axis: Axis,
    pub zero: bool,
}

impl AxisValue {
    pub fn zero(axis: Axis) -> Self {
        AxisValue {
            value: WideReal::ZERO,
            axis,
            zero: true,
        }
    }

    fn new(value: WideReal, axis: Axis) -> Self {
        AxisValue {
            value,
            axis,
            zero: value.is_zero(),
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        let v = self.value.to_f64();
        match self.axis {
            Axis::Real => Complex64::new(v, 0.0),
            Axis::Imaginary => Complex64::new(0.0, v),
        }
    }
}

/// Axis on which `E^{(p,q)}_k` lives: imaginary iff `k_y` is odd.
#[inline]
pub fn axis_of(k: WaveletIndex) -> Axis {
    if k.ky % 2 == 1 {
        Axis::Imaginary
    } else {
        Axis::Real
    }
}

/// Parity-based structural zero, independent of `λ` and the level.
#[inline]
pub fn oddity_zero(p: u32, q: i32, k: WaveletIndex) -> bool {
    let qa = q.unsigned_abs();
    (k.kz + p + qa) % 2 == 1 || (k.kx + k.ky + qa) % 2 == 1 || (q == 0 && (k.kx % 2 == 1 || k.ky % 2 == 1))
}

/// Zero forced by the `x ↔ y` swap symmetry on the diagonal `k_x = k_y`:
/// there `E = (-i)^q conj(E)`, which admits only zero when the phase does
/// not match the axis.
#[inline]
pub fn swap_zero(p: u32, q: i32, k: WaveletIndex) -> bool {
    if k.kx != k.ky || oddity_zero(p, q, k) {
        return false;
    }
    let qm = q.unsigned_abs() % 4;
    if k.ky % 2 == 0 {
        qm == 2
    } else {
        qm == 0
    }
}

/// First term index that can be nonzero: `max(0, ⌈(k_x+k_y+k_z-p)/2⌉)`.
#[inline]
pub fn min_term(p: u32, k: WaveletIndex) -> u32 {
    let t = k.total();
    if t <= p {
        0
    } else {
        (t - p).div_ceil(2)
    }
}

/// The two real parts `I⁽¹⁾`, `I⁽²⁾` of `I_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImParts {
    pub first: WideReal,
    pub second: WideReal,
}

/// `(s i)^e` as (axis, sign): real `±1` for even `e`, `±i` for odd `e`.
fn si_power(s: i32, e: u32) -> (Axis, i32) {
    let quarter = if (e / 2) % 2 == 0 { 1 } else { -1 };
    if e % 2 == 0 {
        (Axis::Real, quarter)
    } else {
        (Axis::Imaginary, quarter * s)
    }
}

fn check_index(p: u32, q: i32) -> Result<(), SeriesError> {
    if q.unsigned_abs() > p {
        return Err(SeriesError::InvalidIndex { p, q });
    }
    Ok(())
}

fn check_table(table: &MomentTable, k: WaveletIndex, l: u32) -> Result<(), SeriesError> {
    if k.max_component() > table.k_max() || l > table.l_max() {
        return Err(SeriesError::TableTooSmall {
            need_k: k.max_component(),
            need_l: l,
            have_k: table.k_max(),
            have_l: table.l_max(),
        });
    }
    Ok(())
}

/// `a_μ = binom(|q|, μ)` for `μ = 0..=|q|`.
fn binomial_row(n: u32) -> Vec<WideReal> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut v = WideReal::ONE;
    row.push(v);
    for j in 0..n {
        v = v.mul_f64((n - j) as f64).div_f64((j + 1) as f64);
        row.push(v);
    }
    row
}

/// `b_ν = (-1)^ν / 2^ν · (2p-2ν-1)!! / (ν! (p-|q|-2ν)!)`, built by ratios.
fn legendre_coefficients(p: u32, qa: u32) -> Vec<WideReal> {
    let d = p - qa;
    // b_0 = (2p-1)!! / d!
    let mut b0 = WideReal::ONE;
    for j in 1..=p {
        b0 = b0.mul_f64((2 * j - 1) as f64);
        if j <= d {
            b0 = b0.div_f64(j as f64);
        }
    }
    let mut out = Vec::with_capacity(d as usize / 2 + 1);
    out.push(b0);
    let mut b = b0;
    for nu in 0..d / 2 {
        let num = ((d - 2 * nu) * (d - 2 * nu - 1)) as f64;
        let den = (2 * (nu + 1) * (2 * p - 2 * nu - 1)) as f64;
        b = -b.mul_f64(num).div_f64(den);
        out.push(b);
    }
    out
}

/// `I⁽¹⁾` and `I⁽²⁾` by the direct quadruple sum over `(μ, ν, α, β)`.
///
/// Terms whose moment factors are structural zeros are skipped before any
/// multiplication.
pub fn eval_im_parts(
    p: u32,
    q: i32,
    k: WaveletIndex,
    m: u32,
    table: &MomentTable,
) -> Result<ImParts, SeriesError> {
    check_index(p, q)?;
    check_table(table, k, 2 * m + p)?;
    let qa = q.unsigned_abs();
    let a = binomial_row(qa);
    let b = legendre_coefficients(p, qa);
    let mut parts = [WideReal::ZERO; 2];
    for (part, acc) in parts.iter_mut().enumerate() {
        let delta = part as u32;
        if qa < delta {
            continue;
        }
        let mu_top = (qa - delta) / 2;
        for mu in 0..=mu_top {
            let a_mu = a[(2 * mu + delta) as usize];
            let a_mu = if mu % 2 == 1 { -a_mu } else { a_mu };
            for (nu, &b_nu) in b.iter().enumerate() {
                let j = m + nu as u32;
                for alpha in 0..=j {
                    let ez = p - qa + 2 * m - 2 * alpha;
                    if MomentTable::is_structural_zero(k.kz, ez) {
                        continue;
                    }
                    let cz = table.binomial(j, alpha) * table.get(k.kz, ez);
                    let mut inner = WideReal::ZERO;
                    for beta in 0..=alpha {
                        let ey = qa + 2 * beta - 2 * mu - delta;
                        let ex = 2 * alpha - 2 * beta + 2 * mu + delta;
                        if MomentTable::is_structural_zero(k.ky, ey)
                            || MomentTable::is_structural_zero(k.kx, ex)
                        {
                            continue;
                        }
                        inner += table.binomial(alpha, beta) * table.get(k.ky, ey) * table.get(k.kx, ex);
                    }
                    if !inner.is_zero() {
                        *acc += a_mu * b_nu * cz * inner;
                    }
                }
            }
        }
    }
    Ok(ImParts {
        first: parts[0],
        second: parts[1],
    })
}

/// `I_m(p, q, k)` as an axis value.
pub fn eval_im(
    p: u32,
    q: i32,
    k: WaveletIndex,
    m: u32,
    table: &MomentTable,
) -> Result<AxisValue, SeriesError> {
    let parts = eval_im_parts(p, q, k, m, table)?;
    let qa = q.unsigned_abs();
    let s = q.signum();
    let (v, e) = if parts.second.is_zero() {
        (parts.first, qa)
    } else {
        debug_assert!(parts.first.is_zero());
        (parts.second, qa + 1)
    };
    if v.is_zero() {
        return Ok(AxisValue::zero(axis_of(k)));
    }
    let (axis, sign) = si_power(s, e);
    let v = if sign < 0 { -v } else { v };
    Ok(AxisValue::new(v, axis))
}

/// Incremental evaluator of `I_m` for fixed `(p, q, k)` and increasing `m`.
///
/// The `β` sums only depend on `α`, so they are cached as `T(α)`; each new
/// `m` then costs one pass over `(ν, α)`.
pub struct ImSequence<'a> {
    table: &'a MomentTable,
    p: u32,
    qa: u32,
    k: WaveletIndex,
    delta: u32,
    a: Vec<WideReal>,
    b: Vec<WideReal>,
    t: Vec<WideReal>,
    /// `Σ |terms|` of each `T(α)`, the scale its rounding error refers to.
    t_abs: Vec<f64>,
    axis: Axis,
    sign: i32,
}

impl<'a> ImSequence<'a> {
    /// Caller guarantees `oddity_zero(p, q, k)` is false.
    pub fn new(p: u32, q: i32, k: WaveletIndex, table: &'a MomentTable) -> Result<Self, SeriesError> {
        check_index(p, q)?;
        check_table(table, k, p)?;
        let qa = q.unsigned_abs();
        let delta = k.kx % 2;
        let (axis, sign) = si_power(q.signum(), qa + delta);
        Ok(ImSequence {
            table,
            p,
            qa,
            k,
            delta,
            a: binomial_row(qa),
            b: legendre_coefficients(p, qa),
            t: Vec::new(),
            t_abs: Vec::new(),
            axis,
            sign,
        })
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    fn extend_t(&mut self, alpha_max: u32) {
        let (qa, delta, k, table) = (self.qa, self.delta, self.k, self.table);
        while self.t.len() <= alpha_max as usize {
            let alpha = self.t.len() as u32;
            let mut acc = WideReal::ZERO;
            let mut abs = 0.0;
            if qa >= delta {
                for mu in 0..=(qa - delta) / 2 {
                    // ey = qa + 2β - 2μ - δ >= ky,  ex = 2α - 2β + 2μ + δ >= kx
                    let off = 2 * mu + delta;
                    let lo = if k.ky + off > qa { (k.ky + off - qa).div_ceil(2) } else { 0 };
                    if 2 * alpha + off < k.kx {
                        continue;
                    }
                    let hi = ((2 * alpha + off - k.kx) / 2).min(alpha);
                    if lo > hi {
                        continue;
                    }
                    let mut inner = WideReal::ZERO;
                    for beta in lo..=hi {
                        let ey = qa + 2 * beta - off;
                        let ex = 2 * alpha - 2 * beta + off;
                        inner += table.binomial(alpha, beta) * table.get(k.ky, ey) * table.get(k.kx, ex);
                    }
                    let c = self.a[off as usize];
                    let c = if mu % 2 == 1 { -c } else { c };
                    acc += c * inner;
                    abs += c.to_f64().abs() * inner.to_f64();
                }
            }
            self.t.push(acc);
            self.t_abs.push(abs);
        }
    }

    /// Signed value of `I_m` along [`ImSequence::axis`].
    pub fn value(&mut self, m: u32) -> Result<WideReal, SeriesError> {
        Ok(self.value_with_scale(m)?.0)
    }

    /// `I_m` together with the sum of the absolute values of its terms.
    ///
    /// The terms alternate in sign, so `I_m` can cancel to a residue far
    /// below the scale; [`ImSequence::is_cancelled`] tests for that.
    pub fn value_with_scale(&mut self, m: u32) -> Result<(WideReal, f64), SeriesError> {
        let (p, qa, k) = (self.p, self.qa, self.k);
        check_table(self.table, k, 2 * m + p)?;
        let j_max = m + (p - qa) / 2;
        if j_max >= self.table.binom_rows() {
            return Err(SeriesError::TableTooSmall {
                need_k: k.max_component(),
                need_l: 2 * j_max,
                have_k: self.table.k_max(),
                have_l: self.table.l_max(),
            });
        }
        // ez = p - qa + 2m - 2α >= kz
        let base = p - qa + 2 * m;
        if base < k.kz {
            return Ok((WideReal::ZERO, 0.0));
        }
        let alpha_cap = (base - k.kz) / 2;
        self.extend_t(alpha_cap.min(j_max));
        let mut total = WideReal::ZERO;
        let mut scale = 0.0;
        for (nu, &b_nu) in self.b.iter().enumerate() {
            let j = m + nu as u32;
            let mut acc = WideReal::ZERO;
            let mut acc_abs = 0.0;
            for alpha in 0..=j.min(alpha_cap) {
                let t = self.t[alpha as usize];
                if t.is_zero() && self.t_abs[alpha as usize] == 0.0 {
                    continue;
                }
                let ez = base - 2 * alpha;
                let w = self.table.binomial(j, alpha) * self.table.get(k.kz, ez);
                acc += w * t;
                acc_abs += w.to_f64() * self.t_abs[alpha as usize];
            }
            total += b_nu * acc;
            scale += b_nu.to_f64().abs() * acc_abs;
        }
        Ok((if self.sign < 0 { -total } else { total }, scale))
    }

    /// Whether a value returned with `scale` is indistinguishable from an
    /// exact cancellation at the working precision.
    pub fn is_cancelled(value: WideReal, scale: f64) -> bool {
        value.abs().to_f64() <= CANCELLATION_LEVEL * scale
    }
}

/// Relative level below which a cancelled sum is treated as zero.
pub const CANCELLATION_LEVEL: f64 = 1.0 / (1u128 << 96) as f64;

/// `C_Y(p, q)` in wide precision.
pub fn harmonic_norm_wide(p: u32, qa: u32) -> WideReal {
    let mut ratio = WideReal::ONE;
    for j in (p - qa + 1)..=(p + qa) {
        ratio = ratio.div_f64(j as f64);
    }
    (ratio.mul_f64((2 * p + 1) as f64) / WideReal::PI.mul_f64(4.0)).sqrt()
}

fn double_factorial_odd(p: u32) -> WideReal {
    // (2p+1)!!
    let mut v = WideReal::ONE;
    for j in 1..=p {
        v = v.mul_f64((2 * j + 1) as f64);
    }
    v
}

/// `C_Y(p,q) / (√8 (2p+1)!!)`, the λ-free part of `C_E`.
fn base_prefactor(p: u32, qa: u32) -> WideReal {
    let sqrt8 = WideReal::from_f64(8.0).sqrt();
    harmonic_norm_wide(p, qa) / (sqrt8 * double_factorial_odd(p))
}

/// `C_E`, `λ_n²/8`, the first index `m0` and `A_{m0}(p) (λ_n²/8)^{m0}`.
fn series_start(
    p: u32,
    q: i32,
    k: WaveletIndex,
    params: &SeriesParams,
) -> (WideReal, WideReal, u32, WideReal) {
    let qa = q.unsigned_abs();
    let ratio = WideReal::from_f64(params.lambda_n) / WideReal::from_f64(2.0 * params.lambda0);
    let prefactor = base_prefactor(p, qa) * ratio.powi(p as i32);
    let x = WideReal::from_f64(params.lambda_n).square().div_f64(8.0);
    let m0 = min_term(p, k);
    // t_m = A_m(p) (λ_n²/8)^m, advanced multiplicatively.
    let mut t = WideReal::ONE;
    for m in 0..m0 {
        t = t * x / WideReal::from_f64(((m + 1) * (2 * m + 2 * p + 3)) as f64);
    }
    (prefactor, x, m0, t)
}

/// The first admissible term `C_{m0}` of the series, zero when `I_{m0}`
/// cancels to rounding level or the element is a structural zero.
///
/// Stopping on this term alone when it is below `ε_a` gives the
/// moment-condition estimate of the sparsity pattern.
pub fn leading_term(
    p: u32,
    q: i32,
    k: WaveletIndex,
    params: &SeriesParams,
    table: &MomentTable,
) -> Result<WideReal, SeriesError> {
    check_index(p, q)?;
    if oddity_zero(p, q, k) || swap_zero(p, q, k) || params.lambda_n == 0.0 {
        return Ok(WideReal::ZERO);
    }
    let (prefactor, _, m0, t) = series_start(p, q, k, params);
    let (im, scale) = ImSequence::new(p, q, k, table)?.value_with_scale(m0)?;
    if ImSequence::is_cancelled(im, scale) {
        return Ok(WideReal::ZERO);
    }
    Ok(prefactor * t * im)
}

/// `E^{(p,q)}_k(0, λ_n)` by the series, with the number of terms summed.
///
/// Summation starts at [`min_term`] and stops at the first `M` whose full
/// term `C_M` (prefactor included) satisfies `|C_M| < ε_a` or
/// `|C_M| < ε_r |Σ_{m<=M} C_m|`. Leading terms whose `I_m` cancels to
/// rounding level are skipped without testing; if more than `p/2 + 1` of
/// them occur the element is an exact zero. Structural zeros return exact
/// zero after zero terms. `λ_n = 0` is delegated to [`eval_e0_laplace`].
pub fn eval_e0(
    p: u32,
    q: i32,
    k: WaveletIndex,
    params: &SeriesParams,
    table: &MomentTable,
) -> Result<(AxisValue, u32), SeriesError> {
    check_index(p, q)?;
    if oddity_zero(p, q, k) || swap_zero(p, q, k) {
        return Ok((AxisValue::zero(axis_of(k)), 0));
    }
    if params.lambda_n == 0.0 {
        return Ok((eval_e0_laplace(p, q, k, table)?, 1));
    }
    let (prefactor, x, m0, mut t) = series_start(p, q, k, params);
    let mut seq = ImSequence::new(p, q, k, table)?;
    let mut sum = WideReal::ZERO;
    let mut m = m0;
    // Leading terms may cancel exactly; they carry no convergence signal.
    let mut leading = true;
    let skip_limit = m0 + p / 2 + 1;
    loop {
        let (im, scale) = seq.value_with_scale(m)?;
        let cancelled = ImSequence::is_cancelled(im, scale);
        if leading && cancelled && m >= skip_limit {
            return Ok((AxisValue::zero(seq.axis()), m - m0 + 1));
        }
        if !(leading && cancelled) {
            leading = false;
            let im = if cancelled { WideReal::ZERO } else { im };
            let term = prefactor * t * im;
            sum += term;
            let mag = term.hi.abs();
            if mag < params.tol.eps_a || mag < params.tol.eps_r * sum.hi.abs() {
                return Ok((AxisValue::new(sum, seq.axis()), m - m0 + 1));
            }
        }
        if m >= params.tol.m_max {
            return Err(SeriesError::NonConvergence {
                p,
                q,
                k,
                partial: sum.to_f64(),
                terms: m - m0 + 1,
            });
        }
        t = t * x / WideReal::from_f64(((m + 1) * (2 * m + 2 * p + 3)) as f64);
        m += 1;
    }
}

/// `λ = 0` element: `C_Y(p,q) / (√8 (2p+1)!! 2^p) · I_0(p,q,k)`.
///
/// This is the `m = 0` term of the series with the `λ`-power dropped, i.e.
/// the projection of `‖x/2‖^p Y_p^q / (2p+1)!!`. It vanishes when
/// `p < k_x + k_y + k_z`.
pub fn eval_e0_laplace(
    p: u32,
    q: i32,
    k: WaveletIndex,
    table: &MomentTable,
) -> Result<AxisValue, SeriesError> {
    check_index(p, q)?;
    if oddity_zero(p, q, k) || swap_zero(p, q, k) || p < k.total() {
        return Ok(AxisValue::zero(axis_of(k)));
    }
    let qa = q.unsigned_abs();
    let mut seq = ImSequence::new(p, q, k, table)?;
    let (i0, scale) = seq.value_with_scale(0)?;
    if ImSequence::is_cancelled(i0, scale) {
        return Ok(AxisValue::zero(seq.axis()));
    }
    let v = base_prefactor(p, qa).ldexp(-(p as i32)) * i0;
    Ok(AxisValue::new(v, seq.axis()))
}

/// `max |φ^k|` over `[-1,1]³`.
pub fn basis_sup_norm(k: WaveletIndex) -> f64 {
    [k.kx, k.ky, k.kz]
        .iter()
        .map(|&ki| ((2 * ki + 1) as f64 / 2.0).sqrt())
        .product()
}
