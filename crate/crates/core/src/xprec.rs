//! Double-double ("wide") real arithmetic built from error-free transformations.
//!
//! A [`WideReal`] carries an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`,
//! giving roughly 106 bits of significand. All internal accumulation of the
//! series and the moment table goes through this type; values are rounded to
//! `f64` only when a matrix entry is stored.
//!
//! The error-free product uses a fused multiply-add when the target has one
//! and Dekker splitting otherwise. Both produce the exact product split, so
//! results are bit-identical across targets.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum XprecError {
    #[error("wide arithmetic overflowed to a non-finite value")]
    Overflow,
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
}

/// Sum `a + b` as `(s, e)` with `s = fl(a + b)` and `s + e = a + b` exactly.
#[inline(always)]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Same as [`two_sum`] but requires `|a| >= |b|` (or `a == 0`).
#[inline(always)]
pub fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[cfg(not(target_feature = "fma"))]
#[inline(always)]
fn split(a: f64) -> (f64, f64) {
    // 2^27 + 1
    const SPLITTER: f64 = 134_217_729.0;
    const SPLIT_THRESH: f64 = 6.696_928_794_914_171e299;
    if a.abs() > SPLIT_THRESH {
        let scaled = a * 3.725_290_298_461_914e-9; // 2^-28
        let t = SPLITTER * scaled;
        let hi = t - (t - scaled);
        let lo = scaled - hi;
        (hi * 268_435_456.0, lo * 268_435_456.0)
    } else {
        let t = SPLITTER * a;
        let hi = t - (t - a);
        (hi, a - hi)
    }
}

/// Product `a * b` as `(p, e)` with `p = fl(a * b)` and `p + e = a * b` exactly
/// (barring underflow).
#[inline(always)]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    #[cfg(target_feature = "fma")]
    {
        (p, a.mul_add(b, -p))
    }
    #[cfg(not(target_feature = "fma"))]
    {
        let (ah, al) = split(a);
        let (bh, bl) = split(b);
        let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
        (p, e)
    }
}

/// Double-double real number `hi + lo`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct WideReal {
    pub hi: f64,
    pub lo: f64,
}

impl fmt::Debug for WideReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WideReal({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for WideReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.hi, f)
    }
}

impl WideReal {
    pub const ZERO: WideReal = WideReal { hi: 0.0, lo: 0.0 };
    pub const ONE: WideReal = WideReal { hi: 1.0, lo: 0.0 };
    pub const PI: WideReal = WideReal {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };

    /// Builds a value from two components, renormalizing them.
    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        WideReal { hi, lo }
    }

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        WideReal { hi: x, lo: 0.0 }
    }

    /// Exact conversion for any `u64` (two pieces of at most 53 bits each).
    pub fn from_u64(n: u64) -> Self {
        let hi = (n >> 32) as f64 * 4_294_967_296.0;
        let lo = (n & 0xffff_ffff) as f64;
        WideReal::new(hi, lo)
    }

    pub fn from_i64(n: i64) -> Self {
        let w = WideReal::from_u64(n.unsigned_abs());
        if n < 0 {
            -w
        } else {
            w
        }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// -1, 0 or 1.
    #[inline]
    pub fn signum(self) -> i32 {
        if self.hi > 0.0 {
            1
        } else if self.hi < 0.0 {
            -1
        } else {
            0
        }
    }

    #[inline]
    fn finite_or_inf(hi: f64, lo: f64) -> Self {
        if hi.is_finite() {
            WideReal { hi, lo }
        } else {
            WideReal { hi, lo: 0.0 }
        }
    }

    #[inline]
    fn add_impl(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        let (hi, lo) = quick_two_sum(s, e);
        Self::finite_or_inf(hi, lo)
    }

    #[inline]
    fn mul_impl(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self::finite_or_inf(hi, lo)
    }

    /// Product with a plain `f64`.
    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Self::finite_or_inf(hi, lo)
    }

    #[inline]
    fn div_impl(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return WideReal { hi: q1, lo: 0.0 };
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        WideReal { hi: q1, lo: q2 } + WideReal::from_f64(q3)
    }

    /// Quotient by a plain `f64`.
    #[inline]
    pub fn div_f64(self, b: f64) -> Self {
        self.div_impl(WideReal::from_f64(b))
    }

    #[inline]
    pub fn recip(self) -> Self {
        WideReal::ONE.div_impl(self)
    }

    #[inline]
    pub fn square(self) -> Self {
        self.mul_impl(self)
    }

    /// Square root; negative inputs give NaN (see [`WideReal::checked_sqrt`]).
    pub fn sqrt(self) -> Self {
        if self.hi == 0.0 {
            return WideReal::ZERO;
        }
        if self.hi < 0.0 {
            return WideReal::from_f64(f64::NAN);
        }
        if !self.hi.is_finite() {
            return WideReal::from_f64(self.hi);
        }
        // One Newton step from the f64 root doubles the precision.
        let y = self.hi.sqrt();
        let yy = WideReal::from_f64(y).square();
        (self - yy).mul_f64(0.5 / y) + WideReal::from_f64(y)
    }

    /// `self^n` by repeated squaring.
    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return WideReal::ONE;
        }
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = WideReal::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    /// Multiplication by `2^n`, exact.
    pub fn ldexp(self, n: i32) -> Self {
        let s = pow2(n);
        WideReal {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn checked_add(self, b: Self) -> Result<Self, XprecError> {
        check(self + b)
    }

    pub fn checked_sub(self, b: Self) -> Result<Self, XprecError> {
        check(self - b)
    }

    pub fn checked_mul(self, b: Self) -> Result<Self, XprecError> {
        check(self * b)
    }

    pub fn checked_div(self, b: Self) -> Result<Self, XprecError> {
        if b.is_zero() {
            return Err(XprecError::DivisionByZero);
        }
        check(self / b)
    }

    pub fn checked_sqrt(self) -> Result<Self, XprecError> {
        if self.hi < 0.0 {
            return Err(XprecError::NegativeSqrt(self.hi));
        }
        check(self.sqrt())
    }
}

fn pow2(n: i32) -> f64 {
    // Split so that each factor stays normal.
    if n > 1000 {
        pow2(1000) * pow2(n - 1000)
    } else if n < -1000 {
        pow2(-1000) * pow2(n + 1000)
    } else {
        f64::from_bits(((n + 1023) as u64) << 52)
    }
}

fn check(v: WideReal) -> Result<WideReal, XprecError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(XprecError::Overflow)
    }
}

impl From<f64> for WideReal {
    fn from(x: f64) -> Self {
        WideReal::from_f64(x)
    }
}

impl From<i32> for WideReal {
    fn from(x: i32) -> Self {
        WideReal::from_f64(x as f64)
    }
}

impl From<u32> for WideReal {
    fn from(x: u32) -> Self {
        WideReal::from_f64(x as f64)
    }
}

impl Neg for WideReal {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        WideReal {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for WideReal {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        self.add_impl(b)
    }
}

impl Sub for WideReal {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self.add_impl(-b)
    }
}

impl Mul for WideReal {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        self.mul_impl(b)
    }
}

impl Div for WideReal {
    type Output = Self;
    #[inline]
    fn div(self, b: Self) -> Self {
        self.div_impl(b)
    }
}

impl AddAssign for WideReal {
    #[inline]
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}

impl SubAssign for WideReal {
    #[inline]
    fn sub_assign(&mut self, b: Self) {
        *self = *self - b;
    }
}

impl MulAssign for WideReal {
    #[inline]
    fn mul_assign(&mut self, b: Self) {
        *self = *self * b;
    }
}

impl DivAssign for WideReal {
    #[inline]
    fn div_assign(&mut self, b: Self) {
        *self = *self / b;
    }
}

impl Sum for WideReal {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(WideReal::ZERO, |a, b| a + b)
    }
}

impl PartialOrd for WideReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}
