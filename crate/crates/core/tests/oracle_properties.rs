//! Behaviour of the quadrature oracle and the multipole evaluator.

use mwxe_core::matrix::{build_matrix, BuildSpec, MultipoleVector, WaveletBlock, ZeroRule};
use mwxe_core::oracle::{direct_potential, multipole_potential, quad_e, QuadratureSpec};
use mwxe_core::moments::MomentTable;
use mwxe_core::series::eval_e0;
use mwxe_core::{SeriesParams, Tolerances, WaveletIndex};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn monopole_dominates_far_away() {
    let mut block = WaveletBlock::zeros(0, [0, 0, 0], 0).unwrap();
    block.set(WaveletIndex::new(0, 0, 0), Complex64::new(1.0, 0.0));
    let c = block.center();
    let x = [c[0] + 10.0, c[1], c[2]];
    let phi = direct_potential(&block, x, 0.0, &QuadratureSpec::default()).unwrap();
    // The unit box carries mass ∫φ^0 = 1.
    let rel = (phi.value.re * 10.0 - 1.0).abs();
    assert!(rel < 1e-3, "{rel}");
    let zero = WaveletBlock::zeros(0, [0, 0, 0], 2).unwrap();
    let phi = direct_potential(&zero, x, 1.0, &QuadratureSpec::default()).unwrap();
    assert_eq!(phi.value, Complex64::new(0.0, 0.0));
}

#[test]
fn multipole_is_invariant_under_lambda0() {
    // Only exact arithmetic cancels the λ0 scalings; an absolute ε_a acts on
    // the scaled entries, so it must not bind here.
    let tol = Tolerances {
        eps_a: 1e-300,
        eps_r: 1e-18,
        ..Tolerances::default()
    };
    let spec = BuildSpec::new(2.0, 10, 3)
        .with_tolerances(tol)
        .with_zero_rule(ZeroRule::Keep);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut block = WaveletBlock::zeros(0, [0, 0, 0], 3).unwrap();
    for k in WaveletIndex::all(3) {
        block.set(k, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
    }
    let x = [2.5, -1.0, 0.75];
    let mut reference = None;
    for lambda0 in [1.0, 2.0, 20.0] {
        let spec = spec.with_lambda0(lambda0);
        let m = build_matrix(&spec, &spec.table().unwrap()).unwrap();
        let mv = m.forward(&block, true).unwrap();
        let phi = multipole_potential(&mv, block.center(), x, 2.0, lambda0).unwrap();
        assert!(phi.im.abs() <= 1e-13 * phi.norm());
        match reference {
            None => reference = Some(phi),
            Some(r) => assert!((phi - r).norm() <= 1e-12 * r.norm(), "λ0={lambda0}"),
        }
    }
}

#[test]
fn single_term_multipole() {
    let mut mv = MultipoleVector::zeros(3);
    mv.set(0, 0, Complex64::new(1.0, 0.0));
    let phi = multipole_potential(&mv, [0.0; 3], [0.0, 0.0, 2.0], 1.0, 1.0).unwrap();
    let want = std::f64::consts::FRAC_PI_2 / 2.0 * (-2.0f64).exp() / (4.0 * std::f64::consts::PI).sqrt();
    assert!((phi.re - want).abs() < 1e-15 && phi.im == 0.0);
}

#[test]
fn doubling_the_rule_order_is_consistent() {
    for (p, q, k, lambda) in [
        (2, 1, WaveletIndex::new(1, 0, 1), 1.0),
        (3, -1, WaveletIndex::new(2, 1, 2), 4.0),
    ] {
        let a = quad_e(p, q, k, lambda, lambda, &QuadratureSpec::default()).unwrap();
        let spec = QuadratureSpec {
            base_rule_order: 24,
            ..QuadratureSpec::default()
        };
        let b = quad_e(p, q, k, lambda, lambda, &spec).unwrap();
        assert!(a.converged && b.converged);
        assert!((a.value - b.value).norm() <= 1e-13 * b.value.norm());
    }
}

#[test]
fn high_degree_at_large_lambda_exhausts_the_budget() {
    let spec = QuadratureSpec {
        max_cells: 64,
        ..QuadratureSpec::default()
    };
    let table = MomentTable::for_series(4, 10, 512).unwrap();
    let params = SeriesParams::new(50.0, 50.0, Tolerances::default()).unwrap();
    for (p, q, k) in [(2, 0, WaveletIndex::new(0, 10, 0)), (4, 2, WaveletIndex::new(10, 0, 10))] {
        let r = quad_e(p, q, k, 50.0, 50.0, &spec).unwrap();
        assert!(!r.converged, "{r:?}");
        let (v, terms) = eval_e0(p, q, k, &params, &table).unwrap();
        assert!(!v.zero && terms < 60);
    }
    // On the symmetric key (10,10,10) with p = 2, q = 0 the element is an
    // exact zero, and one cell already resolves it to absolute accuracy.
    let r = quad_e(2, 0, WaveletIndex::new(10, 10, 10), 1.0, 1.0, &QuadratureSpec::default()).unwrap();
    assert!(r.converged && r.value.norm() < 1e-15);
}
