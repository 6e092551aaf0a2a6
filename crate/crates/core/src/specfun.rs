//! Scaled modified spherical Bessel functions, associated Legendre functions
//! and spherical harmonics.
//!
//! Spherical harmonics use the normalization
//! `Y_p^q = C_Y(p,q) P_p^{|q|}(cos θ) e^{iqφ}` with
//! `C_Y(p,q) = sqrt((2p+1)/4π) sqrt((p-|q|)!/(p+|q|)!)`, so that
//! `Y_p^{-q} = conj(Y_p^q)`. `P_p^m` carries the Condon–Shortley phase.
//!
//! These routines run in plain `f64`. The series core never calls them; they
//! serve the evaluation side (potentials) and the quadrature oracle.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("invalid harmonic index p={p} q={q}")]
    InvalidIndex { p: u32, q: i32 },
    #[error("invalid scale parameters lambda={lambda} lambda0={lambda0}")]
    InvalidScale { lambda: f64, lambda0: f64 },
    #[error("argument {x} out of range for degree {p}")]
    Range { p: u32, x: f64 },
    #[error("k_p is singular at the origin")]
    Singularity,
    #[error("argument {0} outside [-1, 1]")]
    Domain(f64),
}

/// Degree/order pair `(p, q)` with `|q| <= p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HarmonicIndex {
    p: u32,
    q: i32,
}

impl HarmonicIndex {
    pub fn new(p: u32, q: i32) -> Result<Self, SpecFunError> {
        if q.unsigned_abs() > p {
            return Err(SpecFunError::InvalidIndex { p, q });
        }
        Ok(HarmonicIndex { p, q })
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> i32 {
        self.q
    }

    #[inline]
    pub fn q_abs(&self) -> u32 {
        self.q.unsigned_abs()
    }

    /// `sign(q)` in {-1, 0, 1}.
    #[inline]
    pub fn sign(&self) -> i32 {
        self.q.signum()
    }

    /// Position in the triangular `(p, q)` layout, `-p <= q <= p`.
    #[inline]
    pub fn tri_index(&self) -> usize {
        tri_index(self.p, self.q)
    }
}

/// Offset of `(p, q)` in a triangular array holding all `-p <= q <= p`.
#[inline]
pub fn tri_index(p: u32, q: i32) -> usize {
    let p = p as i64;
    (p * p + p + q as i64) as usize
}

/// Length of a triangular array holding degrees `0..=p_max`.
#[inline]
pub fn tri_len(p_max: u32) -> usize {
    let n = p_max as usize + 1;
    n * n
}

/// Kernel decay rate `lambda` and the scaling base `lambda0` of î/k̂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    pub lambda: f64,
    pub lambda0: f64,
}

impl ScaleParams {
    /// Uses the default base: `lambda0 = lambda`, or 1 when `lambda = 0`.
    pub fn new(lambda: f64) -> Result<Self, SpecFunError> {
        Self::with_lambda0(lambda, default_lambda0(lambda))
    }

    pub fn with_lambda0(lambda: f64, lambda0: f64) -> Result<Self, SpecFunError> {
        if !(lambda >= 0.0 && lambda.is_finite() && lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(SpecFunError::InvalidScale { lambda, lambda0 });
        }
        Ok(ScaleParams { lambda, lambda0 })
    }
}

pub fn default_lambda0(lambda: f64) -> f64 {
    if lambda > 0.0 {
        lambda
    } else {
        1.0
    }
}

/// Unscaled `i_0, ..., i_{p_max}` at `x >= 0`.
///
/// Small arguments use the power series; otherwise a normalized downward
/// recurrence started well above `max(p_max, x)`.
pub fn bessel_i_all(p_max: u32, x: f64) -> Result<Vec<f64>, SpecFunError> {
    let n = p_max as usize;
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    if x <= 1.0 {
        for (p, v) in out.iter_mut().enumerate() {
            *v = bessel_i_series(p as u32, x);
        }
        return Ok(out);
    }
    let i0 = x.sinh() / x;
    if !i0.is_finite() {
        return Err(SpecFunError::Range { p: 0, x });
    }
    let start = n.max(x.ceil() as usize) + 30 + (6.0 * x.sqrt()).ceil() as usize;
    let mut above = 0.0f64;
    let mut cur = 1e-280f64;
    for k in (n + 1..=start).rev() {
        // i_{k-1} = i_{k+1} + (2k+1)/x i_k
        let next = above + (2 * k + 1) as f64 / x * cur;
        above = cur;
        cur = next;
        if cur > 1e250 {
            above *= 1e-250;
            cur *= 1e-250;
        }
    }
    // `cur` is now proportional to i_n and `above` to i_{n+1}.
    out[n] = cur;
    let mut hi = above;
    for k in (1..=n).rev() {
        let next = hi + (2 * k + 1) as f64 / x * out[k];
        hi = out[k];
        out[k - 1] = next;
        if out[k - 1] > 1e250 {
            for v in out[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            hi *= 1e-250;
        }
    }
    let base = out[0];
    for v in out.iter_mut() {
        *v = *v / base * i0;
    }
    Ok(out)
}

fn bessel_i_series(p: u32, x: f64) -> f64 {
    let mut lead = 1.0;
    for j in 1..=p {
        lead *= x / (2 * j + 1) as f64;
    }
    let h = 0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 0u32;
    loop {
        m += 1;
        term *= h / (m as f64 * (2 * (p + m) + 1) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    lead * sum
}

/// Unscaled `k_0, ..., k_{p_max}` at `x > 0` by upward recurrence.
pub fn bessel_k_all(p_max: u32, x: f64) -> Result<Vec<f64>, SpecFunError> {
    if x <= 0.0 {
        return Err(SpecFunError::Singularity);
    }
    let n = p_max as usize;
    let mut out = vec![0.0; n + 1];
    out[0] = std::f64::consts::FRAC_PI_2 / x * (-x).exp();
    if n >= 1 {
        out[1] = out[0] * (1.0 + 1.0 / x);
    }
    for k in 1..n {
        out[k + 1] = out[k - 1] + (2 * k + 1) as f64 / x * out[k];
    }
    if let Some(bad) = out.iter().position(|v| !v.is_finite()) {
        return Err(SpecFunError::Range { p: bad as u32, x });
    }
    Ok(out)
}

/// `î_p(λr) = i_p(λr) / λ0^p`.
pub fn scaled_i(p: u32, r: f64, scale: &ScaleParams) -> Result<f64, SpecFunError> {
    Ok(*scaled_i_all(p, r, scale)?.last().unwrap())
}

/// `î_0 .. î_{p_max}` at `λr`.
pub fn scaled_i_all(p_max: u32, r: f64, scale: &ScaleParams) -> Result<Vec<f64>, SpecFunError> {
    let mut v = bessel_i_all(p_max, scale.lambda * r)?;
    let mut s = 1.0;
    for x in v.iter_mut() {
        *x /= s;
        s *= scale.lambda0;
    }
    Ok(v)
}

/// `k̂_p(λr) = k_p(λr) · λ0^p`.
pub fn scaled_k(p: u32, r: f64, scale: &ScaleParams) -> Result<f64, SpecFunError> {
    Ok(*scaled_k_all(p, r, scale)?.last().unwrap())
}

/// `k̂_0 .. k̂_{p_max}` at `λr`.
pub fn scaled_k_all(p_max: u32, r: f64, scale: &ScaleParams) -> Result<Vec<f64>, SpecFunError> {
    let mut v = bessel_k_all(p_max, scale.lambda * r)?;
    let mut s = 1.0;
    for x in v.iter_mut() {
        *x *= s;
        s *= scale.lambda0;
    }
    Ok(v)
}

/// `P_p^m(z)` including the `(-1)^m` Condon–Shortley factor.
pub fn assoc_legendre(p: u32, q_abs: u32, z: f64) -> Result<f64, SpecFunError> {
    if q_abs > p {
        return Err(SpecFunError::InvalidIndex {
            p,
            q: q_abs as i32,
        });
    }
    if !(-1.0..=1.0).contains(&z) {
        return Err(SpecFunError::Domain(z));
    }
    let m = q_abs;
    let sin = ((1.0 - z) * (1.0 + z)).sqrt();
    let mut pmm = 1.0;
    for j in 1..=m {
        pmm *= -((2 * j - 1) as f64) * sin;
    }
    if p == m {
        return Ok(pmm);
    }
    let mut pm1 = z * (2 * m + 1) as f64 * pmm;
    let mut pm0 = pmm;
    for l in m + 2..=p {
        let next = ((2 * l - 1) as f64 * z * pm1 - (l + m - 1) as f64 * pm0) / (l - m) as f64;
        pm0 = pm1;
        pm1 = next;
    }
    Ok(pm1)
}

/// `C_Y(p, q)`.
pub fn harmonic_norm(p: u32, q_abs: u32) -> f64 {
    let mut ratio = 1.0;
    for j in (p - q_abs + 1)..=(p + q_abs) {
        ratio /= j as f64;
    }
    ((2 * p + 1) as f64 / (4.0 * std::f64::consts::PI) * ratio).sqrt()
}

/// `Y_p^q(θ, φ)`.
pub fn spherical_harmonic(idx: HarmonicIndex, theta: f64, phi: f64) -> Complex64 {
    let z = theta.cos().clamp(-1.0, 1.0);
    let plm = assoc_legendre(idx.p, idx.q_abs(), z).expect("validated index");
    let mag = harmonic_norm(idx.p, idx.q_abs()) * plm;
    Complex64::from_polar(1.0, idx.q as f64 * phi) * mag
}

/// All `Y_p^q` for `p <= p_max` in triangular layout (see [`tri_index`]).
pub fn spherical_harmonics_all(p_max: u32, theta: f64, phi: f64) -> Vec<Complex64> {
    let z = theta.cos().clamp(-1.0, 1.0);
    let sin = ((1.0 - z) * (1.0 + z)).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); tri_len(p_max)];
    let mut pmm = 1.0;
    for m in 0..=p_max {
        if m > 0 {
            pmm *= -((2 * m - 1) as f64) * sin;
        }
        let phase = Complex64::from_polar(1.0, m as f64 * phi);
        let mut pm0 = 0.0;
        let mut pm1 = pmm;
        for l in m..=p_max {
            if l == m + 1 {
                pm0 = pm1;
                pm1 = z * (2 * m + 1) as f64 * pmm;
            } else if l > m + 1 {
                let next =
                    ((2 * l - 1) as f64 * z * pm1 - (l + m - 1) as f64 * pm0) / (l - m) as f64;
                pm0 = pm1;
                pm1 = next;
            }
            let y = phase * (harmonic_norm(l, m) * pm1);
            out[tri_index(l, m as i32)] = y;
            out[tri_index(l, -(m as i32))] = y.conj();
        }
    }
    out
}

/// `φ^0(t), ..., φ^{k_max}(t)` with `φ^k = sqrt((2k+1)/2) P_k`, the
/// L²[-1,1]-orthonormal Legendre polynomials.
pub fn normalized_legendre_all(k_max: u32, t: f64) -> Vec<f64> {
    let n = k_max as usize;
    let mut out = vec![0.0; n + 1];
    let (mut p0, mut p1) = (1.0, t);
    out[0] = p0;
    if n >= 1 {
        out[1] = p1;
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * t * p1 - k as f64 * p0) / (k + 1) as f64;
        out[k + 1] = p2;
        p0 = p1;
        p1 = p2;
    }
    for (k, v) in out.iter_mut().enumerate() {
        *v *= ((2 * k + 1) as f64 / 2.0).sqrt();
    }
    out
}

/// Polar angles of a Cartesian vector; φ is measured from +x.
pub fn angles(v: [f64; 3]) -> (f64, f64) {
    let rho = v[0].hypot(v[1]);
    (rho.atan2(v[2]), v[1].atan2(v[0]))
}

#[inline]
pub fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `Q_p^q(λ, y) = î_p(λ‖y‖) Y_p^q(ŷ)`.
///
/// For `λ = 0` this returns the small-λ limit taken with `λ0 = λ`, i.e. the
/// regular solid harmonic `‖y‖^p Y_p^q(ŷ) / (2p+1)!!`.
pub fn eval_q(idx: HarmonicIndex, scale: &ScaleParams, point: [f64; 3]) -> Complex64 {
    let r = norm3(point);
    let (theta, phi) = angles(point);
    let y = spherical_harmonic(idx, theta, phi);
    let radial = if scale.lambda == 0.0 {
        let mut v = 1.0;
        for j in 1..=idx.p {
            v *= r / (2 * j + 1) as f64;
        }
        v
    } else {
        scaled_i(idx.p, r, scale).unwrap_or(f64::INFINITY)
    };
    y * radial
}
