//! Adaptive tensor-product Gauss–Legendre quadrature, used as ground truth
//! for the series and for direct potential integrals.
//!
//! The integrator only uses the pointwise primitives of [`crate::specfun`];
//! it shares no tables with the series code. Each cell carries a coarse
//! estimate (one rule on the cell) and a fine one (the rule on its eight
//! children); their difference is the cell's error estimate. The cell with
//! the largest estimate is split until the summed estimate meets the
//! tolerance, the cell budget runs out, or only cells at maximum depth
//! remain.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::matrix::{MultipoleVector, WaveletBlock};
use crate::series::WaveletIndex;
use crate::specfun::{
    angles, eval_q, norm3, normalized_legendre_all, scaled_k_all, spherical_harmonics_all,
    tri_index, HarmonicIndex, ScaleParams, SpecFunError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("evaluation point {0:?} lies in the source box")]
    Domain([f64; 3]),
    #[error("evaluation point coincides with the expansion center")]
    Singularity,
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss–Legendre points per axis per cell.
    pub base_rule_order: usize,
    pub max_subdivision_depth: u32,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper bound on the number of leaf cells.
    pub max_cells: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            base_rule_order: 12,
            max_subdivision_depth: 12,
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_cells: 4096,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.base_rule_order < 8
            || !(self.abs_tol > 0.0 && self.rel_tol > 0.0)
            || self.max_cells < 8
        {
            return Err(OracleError::InvalidSpec(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    /// A-posteriori error estimate.
    pub error: f64,
    /// Estimate of `∫|f|`, which bounds the attainable absolute accuracy.
    pub abs_integral: f64,
    pub converged: bool,
    pub cells: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 1..n {
                    let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    /// `(Σ w f, Σ w |f|)` over the cube with lower corner `lo` and edge `h`.
    fn apply<F>(&self, f: &F, lo: [f64; 3], h: f64) -> (Complex64, f64)
    where
        F: Fn([f64; 3]) -> Complex64,
    {
        let half = 0.5 * h;
        let map = |c: f64, t: f64| c + half * (t + 1.0);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut abs = 0.0;
        for (&xi, &wi) in self.nodes.iter().zip(&self.weights) {
            let x = map(lo[0], xi);
            for (&yj, &wj) in self.nodes.iter().zip(&self.weights) {
                let y = map(lo[1], yj);
                let mut line = Complex64::new(0.0, 0.0);
                let mut line_abs = 0.0;
                for (&zk, &wk) in self.nodes.iter().zip(&self.weights) {
                    let v = f([x, y, map(lo[2], zk)]);
                    line += v * wk;
                    line_abs += v.norm() * wk;
                }
                sum += line * (wi * wj);
                abs += line_abs * wi * wj;
            }
        }
        let vol = half * half * half;
        (sum * vol, abs * vol)
    }
}

struct Cell {
    lo: [f64; 3],
    h: f64,
    depth: u32,
    /// Rule applied to each of the eight children, in child order.
    children: [(Complex64, f64); 8],
    fine: Complex64,
    abs: f64,
    err: f64,
    id: u64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn child_lo(lo: [f64; 3], h: f64, c: usize) -> [f64; 3] {
    let s = 0.5 * h;
    [
        lo[0] + if c & 1 != 0 { s } else { 0.0 },
        lo[1] + if c & 2 != 0 { s } else { 0.0 },
        lo[2] + if c & 4 != 0 { s } else { 0.0 },
    ]
}

fn make_cell<F>(
    rule: &GaussRule,
    f: &F,
    lo: [f64; 3],
    h: f64,
    depth: u32,
    coarse: Complex64,
    id: u64,
) -> Cell
where
    F: Fn([f64; 3]) -> Complex64 + Sync,
{
    let parts: Vec<(Complex64, f64)> = (0..8)
        .into_par_iter()
        .map(|c| rule.apply(f, child_lo(lo, h, c), 0.5 * h))
        .collect();
    let mut children = [(Complex64::new(0.0, 0.0), 0.0); 8];
    children.copy_from_slice(&parts);
    let fine: Complex64 = children.iter().map(|c| c.0).sum();
    let abs: f64 = children.iter().map(|c| c.1).sum();
    Cell {
        lo,
        h,
        depth,
        children,
        fine,
        abs,
        err: (fine - coarse).norm(),
        id,
    }
}

/// Adaptive integral of `f` over the cube with lower corner `lo` and edge `h`.
pub fn integrate<F>(f: F, lo: [f64; 3], h: f64, spec: &QuadratureSpec) -> Result<QuadResult, OracleError>
where
    F: Fn([f64; 3]) -> Complex64 + Sync,
{
    spec.validate()?;
    let rule = GaussRule::new(spec.base_rule_order);
    let (coarse, _) = rule.apply(&f, lo, h);
    let mut next_id = 0u64;
    let mut heap = BinaryHeap::new();
    heap.push(make_cell(&rule, &f, lo, h, 0, coarse, next_id));
    let mut frozen: Vec<Cell> = Vec::new();
    let target = |value: Complex64, abs: f64| {
        spec.abs_tol
            .max(spec.rel_tol * value.norm())
            .max(64.0 * f64::EPSILON * abs)
    };
    loop {
        let (value, err, abs) = totals(heap.iter().chain(frozen.iter()));
        if err <= target(value, abs) {
            break;
        }
        if heap.len() + frozen.len() + 7 > spec.max_cells {
            break;
        }
        let Some(cell) = heap.pop() else {
            break;
        };
        if cell.depth >= spec.max_subdivision_depth {
            frozen.push(cell);
            continue;
        }
        for c in 0..8 {
            next_id += 1;
            heap.push(make_cell(
                &rule,
                &f,
                child_lo(cell.lo, cell.h, c),
                0.5 * cell.h,
                cell.depth + 1,
                cell.children[c].0,
                next_id,
            ));
        }
    }
    let mut leaves: Vec<&Cell> = heap.iter().chain(frozen.iter()).collect();
    leaves.sort_by_key(|c| c.id);
    let (value, error, abs) = totals(leaves.iter().copied());
    Ok(QuadResult {
        value,
        error,
        abs_integral: abs,
        converged: error <= target(value, abs),
        cells: leaves.len(),
    })
}

fn totals<'a>(cells: impl Iterator<Item = &'a Cell>) -> (Complex64, f64, f64) {
    let mut v = Complex64::new(0.0, 0.0);
    let (mut e, mut a) = (0.0, 0.0);
    for c in cells {
        v += c.fine;
        e += c.err;
        a += c.abs;
    }
    (v, e, a)
}

/// `⟨Q_p^q(λ_n/2, ·), φ^k⟩ / √8` over `[-1,1]³`, with the first argument
/// conjugated.
///
/// `λ_n = 0` integrates the solid-harmonic limit `‖x/2‖^p Y_p^q / (2p+1)!!`.
pub fn quad_e(
    p: u32,
    q: i32,
    k: WaveletIndex,
    lambda_n: f64,
    lambda0: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult, OracleError> {
    let idx = HarmonicIndex::new(p, q)?;
    let scale = ScaleParams::with_lambda0(lambda_n, lambda0)?;
    let kmax = k.max_component();
    let norm = 1.0 / 8f64.sqrt();
    let f = move |x: [f64; 3]| {
        let qv = eval_q(idx, &scale, [0.5 * x[0], 0.5 * x[1], 0.5 * x[2]]).conj();
        let px = normalized_legendre_all(kmax, x[0])[k.kx as usize];
        let py = normalized_legendre_all(kmax, x[1])[k.ky as usize];
        let pz = normalized_legendre_all(kmax, x[2])[k.kz as usize];
        qv * (px * py * pz * norm)
    };
    integrate(f, [-1.0; 3], 2.0, spec)
}

/// Entries within this factor of the attainable accuracy are compared
/// against that accuracy instead of their own magnitude.
pub const NOISE_MARGIN: f64 = 1e10;

/// Relative difference between a series value and a quadrature result.
///
/// The attainable absolute accuracy is `eps_a` (series truncation) plus
/// `64 ε ∫|f|` (quadrature rounding); the denominator is
/// `max(|quad|, NOISE_MARGIN · that accuracy)`, so exact zeros and entries
/// lost in rounding noise do not report spurious relative errors.
pub fn comparison_error(series: Complex64, quad: &QuadResult, eps_a: f64) -> f64 {
    let noise = eps_a + 64.0 * f64::EPSILON * quad.abs_integral;
    let denom = quad.value.norm().max(NOISE_MARGIN * noise);
    if denom == 0.0 {
        return (series - quad.value).norm();
    }
    (series - quad.value).norm() / denom
}

/// `∫_box e^{-λ‖x-y‖}/‖x-y‖ Σ_k s^k φ^k_{(n,l)}(y) dy` for `x` outside the box.
pub fn direct_potential(
    block: &WaveletBlock,
    x: [f64; 3],
    lambda: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult, OracleError> {
    if block.contains(x) {
        return Err(OracleError::Domain(x));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(OracleError::InvalidSpec(format!("lambda={lambda}")));
    }
    let f = |y: [f64; 3]| {
        let r = norm3([x[0] - y[0], x[1] - y[1], x[2] - y[2]]);
        block.eval(y) * ((-lambda * r).exp() / r)
    };
    integrate(f, block.corner(), block.width(), spec)
}

/// `Σ_{p <= p_max} Σ_q M_p^q k̂_p(λ‖x-c‖) Y_p^q` of the direction `x - c`.
pub fn multipole_potential(
    m: &MultipoleVector,
    center: [f64; 3],
    x: [f64; 3],
    lambda: f64,
    lambda0: f64,
) -> Result<Complex64, OracleError> {
    let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
    let r = norm3(d);
    if r == 0.0 {
        return Err(OracleError::Singularity);
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(OracleError::InvalidSpec(format!("lambda={lambda}")));
    }
    let scale = ScaleParams::with_lambda0(lambda, lambda0)?;
    let kh = scaled_k_all(m.p_max, r, &scale)?;
    let (theta, phi) = angles(d);
    let y = spherical_harmonics_all(m.p_max, theta, phi);
    let mut acc = Complex64::new(0.0, 0.0);
    for p in (0..=m.p_max).rev() {
        let mut row = Complex64::new(0.0, 0.0);
        for q in -(p as i32)..=p as i32 {
            let i = tri_index(p, q);
            row += m.coeffs[i] * y[i];
        }
        acc += row * kh[p as usize];
    }
    Ok(acc)
}
