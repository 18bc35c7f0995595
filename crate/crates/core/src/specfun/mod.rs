//! Special functions: gamma family, Bessel K, and hypergeometric series.

mod bessel;
pub(crate) mod dd;
mod gamma;
mod hypergeometric;

pub use bessel::{bessel_j0, bessel_k, bessel_k_scaled};
pub use gamma::{digamma, gamma, gamma_ratio, ln_beta, ln_gamma_signed, log_gamma, sin_pi};
pub(crate) use hypergeometric::hyp2f1_scaled;
pub use hypergeometric::{
    hyp1f2, hyp1f2_with, hyp2f1, hyp2f1_direct, hyp2f1_reflected, hyp2f1_with, Hyp2f1Path, Hyp2f1Value, Scaled,
    HYP1F2_CAP,
};

use crate::error::{Error, Result};

/// Truncation policy for hypergeometric series. A series stops after two
/// consecutive terms fall below `rel_tol·|sum|` (or `abs_tol`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            max_terms: 10_000,
            rel_tol: 1e-14,
            abs_tol: 1e-300,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if self.max_terms < 1 {
            return Err(Error::InvalidParameter("max_terms must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol = {} must lie in (0, 1)",
                self.rel_tol
            )));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::InvalidParameter("abs_tol must be nonnegative".into()));
        }
        Ok(())
    }
}
