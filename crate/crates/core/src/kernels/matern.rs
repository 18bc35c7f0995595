use std::f64::consts::LN_2;

use super::MaternParams;
use crate::error::Result;
use crate::specfun::{bessel_k_scaled, log_gamma};

/// Matérn correlation evaluator with its normalizing constant precomputed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum MaternKernel {
    /// Closed forms for ν = k + 1/2, k = 0..3.
    HalfInteger {
        k: u8,
        beta: f64,
    },
    General {
        nu: f64,
        beta: f64,
        ln_norm: f64,
    },
}

impl MaternKernel {
    pub(crate) fn new(p: &MaternParams) -> Result<Self> {
        let half = [0.5, 1.5, 2.5, 3.5].iter().position(|&v| v == p.nu);
        if let Some(k) = half {
            return Ok(MaternKernel::HalfInteger {
                k: k as u8,
                beta: p.beta,
            });
        }
        Ok(MaternKernel::General {
            nu: p.nu,
            beta: p.beta,
            ln_norm: (1.0 - p.nu) * LN_2 - log_gamma(p.nu)?,
        })
    }

    pub(crate) fn eval(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Ok(1.0);
        }
        match *self {
            MaternKernel::HalfInteger { k, beta } => {
                let t = r / beta;
                let poly = match k {
                    0 => 1.0,
                    1 => 1.0 + t,
                    2 => 1.0 + t + t * t / 3.0,
                    _ => 1.0 + t + 0.4 * t * t + t * t * t / 15.0,
                };
                Ok((-t).exp() * poly)
            }
            MaternKernel::General { nu, beta, ln_norm } => {
                let t = r / beta;
                let ks = bessel_k_scaled(nu, t)?;
                if !ks.is_finite() {
                    // K_ν(t) overflowed: t is far inside the range where ρ ≈ 1
                    return Ok(1.0);
                }
                let v = (ln_norm + nu * t.ln() + ks.ln() - t).exp();
                Ok(v.min(1.0))
            }
        }
    }
}

/// Matérn correlation 2^{1−ν}/Γ(ν) (r/β)^ν K_ν(r/β).
pub fn matern(r: f64, p: &MaternParams) -> Result<f64> {
    super::check_distance(r)?;
    MaternKernel::new(p)?.eval(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(nu: f64, beta: f64) -> MaternParams {
        MaternParams::new(nu, beta).unwrap()
    }

    #[test]
    fn unit_at_origin() {
        for nu in [0.3, 0.5, 1.0, 2.5, 7.0] {
            assert_eq!(matern(0.0, &params(nu, 0.2)).unwrap(), 1.0);
        }
    }

    #[test]
    fn closed_forms_at_scale() {
        let e1 = (-1.0f64).exp();
        assert!((matern(0.7, &params(0.5, 0.7)).unwrap() - e1).abs() < 1e-15);
        assert!((matern(0.7, &params(1.5, 0.7)).unwrap() - 2.0 * e1).abs() < 1e-15);
        assert!((matern(2.0, &params(0.5, 2.0)).unwrap() - 0.367_879_441_2).abs() < 1e-10);
        assert!((matern(2.0, &params(1.5, 2.0)).unwrap() - 0.735_758_882_3).abs() < 1e-10);
    }

    #[test]
    fn general_path_matches_closed_forms() {
        // evaluate the Bessel route at ν slightly off the half-integers
        for (nu, k) in [(0.5, 0u8), (1.5, 1), (2.5, 2), (3.5, 3)] {
            let closed = MaternKernel::HalfInteger { k, beta: 1.0 };
            let general = MaternKernel::General {
                nu,
                beta: 1.0,
                ln_norm: (1.0 - nu) * LN_2 - log_gamma(nu).unwrap(),
            };
            for i in 1..200 {
                let r = i as f64 * 0.05;
                let a = closed.eval(r).unwrap();
                let b = general.eval(r).unwrap();
                assert!((a - b).abs() < 1e-13, "nu={nu} r={r}");
            }
        }
    }

    #[test]
    fn decreasing_and_positive() {
        for nu in [0.2, 1.0, 3.3, 9.0] {
            let p = params(nu, 0.3);
            let mut prev = 1.0;
            for i in 1..400 {
                let v = matern(i as f64 * 0.01, &p).unwrap();
                assert!(v > 0.0 && v < prev, "nu={nu} i={i}");
                prev = v;
            }
        }
    }

    #[test]
    fn tiny_lag_saturates() {
        let v = matern(1e-300, &params(8.0, 1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }
}
