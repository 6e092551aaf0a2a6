//! Double-double arithmetic against exact rational arithmetic.

use mwxe_core::WideReal;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

fn exact(w: WideReal) -> BigRational {
    BigRational::from_float(w.hi).unwrap() + BigRational::from_float(w.lo).unwrap()
}

fn rel_err(got: WideReal, want: &BigRational) -> f64 {
    let diff = (exact(got) - want).abs();
    if want.is_zero() {
        return diff.to_f64().unwrap();
    }
    (diff / want.abs()).to_f64().unwrap()
}

fn wide() -> impl Strategy<Value = WideReal> {
    (1.0f64..2.0, -60i32..60, -1.0f64..1.0, any::<bool>()).prop_map(|(m, e, t, neg)| {
        let hi = if neg { -m } else { m } * 2f64.powi(e);
        WideReal::new(hi, hi * t * f64::EPSILON)
    })
}

const BOUND: f64 = 2.5e-29; // 2^-95

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn add_sub_mul_div_within_bound(a in wide(), b in wide()) {
        let (ea, eb) = (exact(a), exact(b));
        let sum = ea.clone() + &eb;
        let s = a + b;
        // Addition is bounded relative to the operands, the result can cancel.
        let scale = ea.abs() + eb.abs();
        prop_assert!(((exact(s) - &sum).abs() / &scale).to_f64().unwrap() <= BOUND);
        let d = a - b;
        prop_assert!(((exact(d) - (ea.clone() - &eb)).abs() / &scale).to_f64().unwrap() <= BOUND);
        prop_assert!(rel_err(a * b, &(ea.clone() * &eb)) <= BOUND);
        prop_assert!(rel_err(a / b, &(ea.clone() / &eb)) <= BOUND);
        prop_assert_eq!(a + b, b + a);
        prop_assert_eq!(a * b, b * a);
    }

    #[test]
    fn sqrt_within_bound(a in wide()) {
        let a = a.abs();
        let r = a.sqrt();
        // |r² - a| / a is twice the relative error of r.
        let err = ((exact(r) * exact(r) - exact(a)).abs() / exact(a)).to_f64().unwrap();
        prop_assert!(err <= 2.0 * BOUND);
    }

    #[test]
    fn results_are_renormalized(a in wide(), b in wide()) {
        for w in [a + b, a - b, a * b, a / b, a.abs().sqrt()] {
            prop_assert_eq!(w.hi + w.lo, w.hi);
        }
    }
}

#[test]
fn million_tenths() {
    let tenth = WideReal::from_f64(0.1);
    let mut acc = WideReal::ZERO;
    for _ in 0..1_000_000 {
        acc += tenth;
    }
    // The oracle sums the same binary input exactly.
    let want = BigRational::from_float(0.1).unwrap() * BigRational::from_integer(BigInt::from(1_000_000));
    assert!(rel_err(acc, &want) <= 1e-25);
    assert!((acc.to_f64() - 1e5).abs() < 1e-9);
}

#[test]
fn double_factorial_59() {
    let mut w = WideReal::ONE;
    let mut big = BigInt::one();
    for j in (1..=59u32).step_by(2) {
        w *= WideReal::from(j);
        big *= BigInt::from(j);
    }
    let want = BigRational::from_integer(big);
    assert!(rel_err(w, &want) <= BOUND);
}
