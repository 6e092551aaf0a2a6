//! Exact moments `Î_k^l = ∫_{-1}^{1} ζ^l φ^k(ζ) dζ` of monomials against the
//! L²-normalized Legendre polynomials `φ^k = sqrt((2k+1)/2) P_k`.
//!
//! The table is filled by the three-term recurrence of the polynomials, with
//! no quadrature. The rearranged recurrence
//!
//! ```text
//! Î_k^{l+1} = α_k⁻¹ Î_{k+1}^l + α_k⁻¹γ_k Î_{k-1}^l     (l + k odd, k < l)
//! Î_k^k     = α_k⁻¹γ_k Î_{k-1}^{k-1}
//! ```
//!
//! has only non-negative coefficients and terms, so no cancellation occurs.
//! It reaches row `k` at column `l` through rows up to `(l + k)/2`, so the
//! sweep keeps a shrinking band of auxiliary rows above `k_max`.
//!
//! The table also carries the binomial coefficients needed by the series over
//! the same working range.

use std::fmt::Write as _;

use thiserror::Error;

use crate::xprec::WideReal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MomentError {
    #[error("invalid table size k_max={k_max} l_max={l_max}")]
    InvalidSize { k_max: u32, l_max: u32 },
    #[error("moment index (k={k}, l={l}) outside table (k_max={k_max}, l_max={l_max})")]
    OutOfRange {
        k: u32,
        l: u32,
        k_max: u32,
        l_max: u32,
    },
}

/// Coefficients of the moment recurrence for one orthogonal family.
pub trait MomentRecurrence {
    /// `Î_0^l` and `Î_1^l`.
    fn initial(&self, k: u32, l: u32) -> WideReal;
    /// `α_k⁻¹`.
    fn alpha_inv(&self, k: u32) -> WideReal;
    /// `α_k⁻¹ γ_k`.
    fn alpha_inv_gamma(&self, k: u32) -> WideReal;
}

/// L²[-1,1]-normalized Legendre polynomials.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalizedLegendre;

impl MomentRecurrence for NormalizedLegendre {
    fn initial(&self, k: u32, l: u32) -> WideReal {
        // φ^0 = 1/√2, φ^1 = √(3/2) ζ
        match k {
            0 if l % 2 == 0 => WideReal::from_f64(2.0).sqrt().div_f64((l + 1) as f64),
            1 if l % 2 == 1 => {
                let a1 = (WideReal::from_f64(3.0) / WideReal::from_f64(2.0)).sqrt();
                a1.mul_f64(2.0).div_f64((l + 2) as f64)
            }
            _ => WideReal::ZERO,
        }
    }

    fn alpha_inv(&self, k: u32) -> WideReal {
        let k = k as f64;
        let ratio = (WideReal::from_f64(2.0 * k + 1.0) / WideReal::from_f64(2.0 * k + 3.0)).sqrt();
        ratio.mul_f64(k + 1.0).div_f64(2.0 * k + 1.0)
    }

    fn alpha_inv_gamma(&self, k: u32) -> WideReal {
        if k == 0 {
            return WideReal::ZERO;
        }
        let k = k as f64;
        let ratio = (WideReal::from_f64(2.0 * k + 1.0) / WideReal::from_f64(2.0 * k - 1.0)).sqrt();
        ratio.mul_f64(k).div_f64(2.0 * k + 1.0)
    }
}

/// Dense table of `Î_k^l` for `k <= k_max`, `l <= l_max`, plus binomials.
#[derive(Debug, Clone)]
pub struct MomentTable {
    k_max: u32,
    l_max: u32,
    entries: Vec<WideReal>,
    binom_rows: u32,
    binom: Vec<WideReal>,
}

impl MomentTable {
    /// Builds the normalized-Legendre table.
    pub fn build(k_max: u32, l_max: u32) -> Result<Self, MomentError> {
        Self::build_with(&NormalizedLegendre, k_max, l_max)
    }

    /// Table sized for series evaluation up to `m_max` terms at degree `p_max`.
    pub fn for_series(p_max: u32, k_max: u32, m_max: u32) -> Result<Self, MomentError> {
        let l_max = (2 * m_max + p_max).max(k_max.max(1));
        Self::build(k_max.max(1), l_max)
    }

    pub fn build_with<R: MomentRecurrence>(
        rec: &R,
        k_max: u32,
        l_max: u32,
    ) -> Result<Self, MomentError> {
        if k_max < 1 || l_max < k_max {
            return Err(MomentError::InvalidSize { k_max, l_max });
        }
        let width = l_max as usize + 1;
        let rows = k_max as usize + 1;
        let mut entries = Vec::new();
        entries
            .try_reserve_exact(rows * width)
            .map_err(|_| MomentError::InvalidSize { k_max, l_max })?;
        entries.resize(rows * width, WideReal::ZERO);

        // Row k is needed at column l only while k <= k_max + (l_max - l).
        let band = ((l_max + k_max) / 2 + 1) as usize;
        let alpha_inv: Vec<WideReal> = (0..=band as u32).map(|k| rec.alpha_inv(k)).collect();
        let alpha_inv_gamma: Vec<WideReal> =
            (0..=band as u32).map(|k| rec.alpha_inv_gamma(k)).collect();

        let mut col = vec![WideReal::ZERO; band + 2];
        let mut next = vec![WideReal::ZERO; band + 2];
        col[0] = rec.initial(0, 0);
        for l in 0..=l_max {
            let top = (l as usize).min(k_max as usize + (l_max - l) as usize).min(band);
            for k in 0..=top.min(k_max as usize) {
                entries[k * width + l as usize] = col[k];
            }
            if l == l_max {
                break;
            }
            let l1 = l + 1;
            let new_top = (l1 as usize)
                .min(k_max as usize + (l_max - l1) as usize)
                .min(band);
            for k in 0..=new_top {
                next[k] = if k <= 1 {
                    rec.initial(k as u32, l1)
                } else if (l1 as usize + k) % 2 == 1 {
                    WideReal::ZERO
                } else if k == l1 as usize {
                    alpha_inv_gamma[k] * col[k - 1]
                } else {
                    let upper = if k < top { col[k + 1] } else { WideReal::ZERO };
                    alpha_inv[k] * upper + alpha_inv_gamma[k] * col[k - 1]
                };
            }
            for v in next[new_top + 1..].iter_mut() {
                *v = WideReal::ZERO;
            }
            std::mem::swap(&mut col, &mut next);
        }

        let binom_rows = l_max / 2 + 2;
        let binom = pascal(binom_rows);
        Ok(MomentTable {
            k_max,
            l_max,
            entries,
            binom_rows,
            binom,
        })
    }

    #[inline]
    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    #[inline]
    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    /// `Î_k^l`, checked.
    pub fn moment(&self, k: u32, l: u32) -> Result<WideReal, MomentError> {
        if k > self.k_max || l > self.l_max {
            return Err(MomentError::OutOfRange {
                k,
                l,
                k_max: self.k_max,
                l_max: self.l_max,
            });
        }
        Ok(self.get(k, l))
    }

    /// `Î_k^l` without the range check (panics outside the table).
    #[inline(always)]
    pub fn get(&self, k: u32, l: u32) -> WideReal {
        self.entries[k as usize * (self.l_max as usize + 1) + l as usize]
    }

    /// Whether `Î_k^l` is a structural zero.
    #[inline(always)]
    pub fn is_structural_zero(k: u32, l: u32) -> bool {
        l < k || (l + k) % 2 == 1
    }

    /// Number of binomial rows available (`n < binom_rows()`).
    #[inline]
    pub fn binom_rows(&self) -> u32 {
        self.binom_rows
    }

    /// `binom(n, j)` for `n < binom_rows()`.
    #[inline(always)]
    pub fn binomial(&self, n: u32, j: u32) -> WideReal {
        debug_assert!(n < self.binom_rows && j <= n);
        let n = n as usize;
        self.binom[n * (n + 1) / 2 + j as usize]
    }

    /// Text dump of the structural nonzeros, one `k l value` row each.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for k in 0..=self.k_max {
            for l in k..=self.l_max {
                if Self::is_structural_zero(k, l) {
                    continue;
                }
                let _ = writeln!(out, "{} {} {:e}", k, l, self.get(k, l).to_f64());
            }
        }
        out
    }
}

fn pascal(rows: u32) -> Vec<WideReal> {
    let rows = rows as usize;
    let mut tri = Vec::with_capacity(rows * (rows + 1) / 2);
    for n in 0..rows {
        let base = tri.len();
        for j in 0..=n {
            let v = if j == 0 || j == n {
                WideReal::ONE
            } else {
                let prev = base - n;
                tri[prev + j - 1] + tri[prev + j]
            };
            tri.push(v);
        }
    }
    tri
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: WideReal, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn low_order_values() {
        let t = MomentTable::build(4, 12).unwrap();
        assert!(close(t.get(0, 0), 2f64.sqrt(), 1e-15));
        assert!(close(t.get(1, 1), (2.0f64 / 3.0).sqrt(), 1e-15));
        assert!(close(t.get(2, 2), 4.0 / 15.0 * 2.5f64.sqrt(), 1e-15));
        assert!(close(t.moment(0, 2).unwrap(), 2f64.sqrt() / 3.0, 1e-15));
        assert!(t.get(3, 1).is_zero());
        assert!(t.get(2, 3).is_zero());
        assert!(t.moment(1, 0).unwrap().is_zero());
        assert!(t.moment(4, 3).unwrap().is_zero());
    }

    #[test]
    fn out_of_range_and_bad_size() {
        let t = MomentTable::build(5, 10).unwrap();
        assert!(t.moment(5, 4).unwrap().is_zero());
        assert!(matches!(t.moment(6, 0), Err(MomentError::OutOfRange { .. })));
        assert!(matches!(t.moment(0, 11), Err(MomentError::OutOfRange { .. })));
        assert!(MomentTable::build(0, 10).is_err());
        assert!(MomentTable::build(5, 4).is_err());
    }

    #[test]
    fn structural_zero_pattern() {
        let t = MomentTable::build(12, 60).unwrap();
        for k in 0..=12 {
            for l in 0..=60 {
                let z = t.get(k, l).is_zero();
                assert_eq!(z, MomentTable::is_structural_zero(k, l), "k={k} l={l}");
            }
        }
    }

    #[test]
    fn binomials() {
        let t = MomentTable::build(2, 40).unwrap();
        assert_eq!(t.binom_rows(), 22);
        assert_eq!(t.binomial(0, 0).to_f64(), 1.0);
        assert_eq!(t.binomial(10, 3).to_f64(), 120.0);
        assert_eq!(t.binomial(21, 10).to_f64(), 352_716.0);
    }

    #[test]
    fn dump_rows() {
        let t = MomentTable::build(1, 3).unwrap();
        let d = t.dump();
        let lines: Vec<&str> = d.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("0 0 "));
        assert!(lines[3].starts_with("1 3 "));
    }
}
