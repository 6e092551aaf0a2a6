//! Quadrature-free conversion matrices between multiwavelet coefficients and
//! multipole/local expansions of the screened Coulomb kernel `e^{-λr}/r`.

pub mod matrix;
pub mod moments;
pub mod oracle;
pub mod series;
pub mod specfun;
pub mod xprec;

pub use moments::MomentTable;
pub use series::{Axis, AxisValue, SeriesParams, Tolerances, WaveletIndex};
pub use specfun::{HarmonicIndex, ScaleParams};
pub use xprec::WideReal;
