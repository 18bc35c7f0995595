use std::f64::consts::LN_2;

use super::{check_distance, GenWendlandParams};
use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, QuadOptions};
use crate::specfun::{hyp2f1_scaled, ln_beta, log_gamma, SeriesControl};

/// Term budget for the direct ₂F₁ series near z = 1 with large μ.
const DIRECT_TERMS: usize = 4_000_000;
/// Budget beyond which the production kernel switches to quadrature.
const HYBRID_TERMS: usize = 20_000;
/// Absolute accuracy demanded of the hypergeometric route in the
/// production kernel, which can fall back to quadrature.
const ABS_ERR: f64 = 1e-12;
/// Accuracy accepted from the series-only route, which has no fallback.
const SERIES_ONLY_ABS_ERR: f64 = 1e-9;

/// Generalized Wendland evaluator with precomputed constants.
#[derive(Debug, Clone, Copy)]
pub(crate) enum WendlandKernel {
    Askey { mu: f64, support: f64 },
    Closed { nu: u8, mu: f64, support: f64 },
    Series(SeriesKernel),
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SeriesKernel {
    nu: f64,
    mu: f64,
    support: f64,
    ln_k: f64,
    ln_b: f64,
}

impl SeriesKernel {
    pub(crate) fn new(nu: f64, mu: f64, support: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::domain("gw_hypergeometric", "requires nu > 0"));
        }
        let ln_k = log_gamma(nu)? + log_gamma(2.0 * nu + mu + 1.0)?
            - log_gamma(2.0 * nu)?
            - log_gamma(nu + mu + 1.0)?
            - (mu + 1.0) * LN_2;
        let ln_b = ln_beta(2.0 * nu, mu + 1.0)?;
        Ok(SeriesKernel {
            nu,
            mu,
            support,
            ln_k,
            ln_b,
        })
    }

    /// Series evaluation; when the series would need more than
    /// `HYBRID_TERMS` terms the integral representation is used instead.
    pub(crate) fn eval(&self, r: f64) -> Result<f64> {
        match self.eval_series(r, HYBRID_TERMS, ABS_ERR) {
            Err(Error::NonConvergence { .. }) => integral_value(r / self.support, self.nu, self.mu, self.ln_b),
            other => other,
        }
    }

    /// Series-only evaluation: accurate to `ABS_ERR` when the direct series
    /// fits the term budget, otherwise to `SERIES_ONLY_ABS_ERR`.
    pub(crate) fn eval_series_only(&self, r: f64) -> Result<f64> {
        match self.eval_series(r, DIRECT_TERMS, ABS_ERR) {
            Err(Error::NonConvergence { .. }) => self.eval_series(r, 1, SERIES_ONLY_ABS_ERR),
            other => other,
        }
    }

    fn eval_series(&self, r: f64, direct_budget: usize, abs_err: f64) -> Result<f64> {
        let x = r / self.support;
        if x >= 1.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Ok(1.0);
        }
        let z = (1.0 - x) * (1.0 + x);
        let (nu, mu) = (self.nu, self.mu);
        let ln_pre = self.ln_k + (nu + mu) * z.ln();
        let ctl = SeriesControl::default();
        let (f, _) = hyp2f1_scaled(
            0.5 * mu,
            0.5 * (mu + 1.0),
            nu + mu + 1.0,
            z,
            &ctl,
            direct_budget,
            Some(abs_err.ln() - ln_pre),
        )?;
        if f.mantissa <= 0.0 {
            return Ok(0.0);
        }
        Ok((ln_pre + f.log_scale + f.mantissa.ln()).exp().min(1.0))
    }
}

impl WendlandKernel {
    /// Dispatching evaluator: Askey for ν = 0, closed forms for ν ∈ {1, 2, 3},
    /// the hypergeometric series otherwise.
    pub(crate) fn new(p: &GenWendlandParams) -> Result<Self> {
        if p.nu == 0.0 {
            return Ok(WendlandKernel::Askey {
                mu: p.mu,
                support: p.support,
            });
        }
        if p.nu == 1.0 || p.nu == 2.0 || p.nu == 3.0 {
            return Ok(WendlandKernel::Closed {
                nu: p.nu as u8,
                mu: p.mu,
                support: p.support,
            });
        }
        Ok(WendlandKernel::Series(SeriesKernel::new(p.nu, p.mu, p.support)?))
    }

    pub(crate) fn eval(&self, r: f64) -> Result<f64> {
        match *self {
            WendlandKernel::Askey { mu, support } => Ok(askey(r / support, mu)),
            WendlandKernel::Closed { nu, mu, support } => Ok(closed_form(nu, r / support, mu)),
            WendlandKernel::Series(ref k) => k.eval(r),
        }
    }
}

fn askey(x: f64, mu: f64) -> f64 {
    if x >= 1.0 {
        0.0
    } else {
        (1.0 - x).powf(mu)
    }
}

fn closed_form(nu: u8, x: f64, mu: f64) -> f64 {
    if x >= 1.0 {
        return 0.0;
    }
    let base = 1.0 - x;
    match nu {
        1 => base.powf(mu + 1.0) * (1.0 + x * (mu + 1.0)),
        2 => base.powf(mu + 2.0) * (1.0 + x * (mu + 2.0) + x * x * (mu * mu + 4.0 * mu + 3.0) / 3.0),
        _ => {
            let mu2 = mu * mu;
            base.powf(mu + 3.0)
                * (1.0
                    + x * (mu + 3.0)
                    + x * x * (2.0 * mu2 + 12.0 * mu + 15.0) / 5.0
                    + x * x * x * (mu2 * mu + 9.0 * mu2 + 23.0 * mu + 15.0) / 15.0)
        }
    }
}

/// Askey function (1 − r/support)^μ₊, the ν = 0 member.
pub fn gw_askey(r: f64, p: &GenWendlandParams) -> Result<f64> {
    check_distance(r)?;
    if p.nu != 0.0 {
        return Err(Error::domain("gw_askey", format!("requires nu = 0, got {}", p.nu)));
    }
    Ok(askey(r / p.support, p.mu))
}

/// Closed forms for integer ν ∈ {0, 1, 2, 3}; `None` for other ν.
pub fn gw_closed_form(r: f64, p: &GenWendlandParams) -> Result<Option<f64>> {
    check_distance(r)?;
    let x = r / p.support;
    Ok(match p.nu {
        v if v == 0.0 => Some(askey(x, p.mu)),
        v if v == 1.0 || v == 2.0 || v == 3.0 => Some(closed_form(v as u8, x, p.mu)),
        _ => None,
    })
}

/// Hypergeometric representation K (1 − x²)^{ν+μ} ₂F₁(μ/2, (μ+1)/2; ν+μ+1; 1 − x²)
/// evaluated by series for any ν > 0, without closed-form dispatch.
pub fn gw_series(r: f64, p: &GenWendlandParams) -> Result<f64> {
    check_distance(r)?;
    SeriesKernel::new(p.nu, p.mu, p.support)?.eval_series_only(r)
}

/// Generalized Wendland correlation for ν > 0: closed forms for integer ν,
/// the hypergeometric series otherwise (never quadrature).
pub fn gw_hypergeometric(r: f64, p: &GenWendlandParams) -> Result<f64> {
    check_distance(r)?;
    if !(p.nu > 0.0) {
        return Err(Error::domain("gw_hypergeometric", "requires nu > 0"));
    }
    match WendlandKernel::new(p)? {
        WendlandKernel::Series(k) => k.eval_series_only(r),
        k => k.eval(r),
    }
}

/// Generalized Wendland correlation for any ν ≥ 0.
pub fn gen_wendland(r: f64, p: &GenWendlandParams) -> Result<f64> {
    check_distance(r)?;
    WendlandKernel::new(p)?.eval(r)
}

/// Integral representation
/// (1/B(2ν, μ+1)) ∫_x^1 u (u² − x²)^{ν−1} (1 − u)^μ du, x = r/support,
/// evaluated by adaptive quadrature. Independent of the series route.
pub fn gw_integral(r: f64, p: &GenWendlandParams) -> Result<f64> {
    check_distance(r)?;
    if !(p.nu > 0.0) {
        return Err(Error::domain(
            "gw_integral",
            "requires nu > 0 (use gw_askey for nu = 0)",
        ));
    }
    integral_value(r / p.support, p.nu, p.mu, ln_beta(2.0 * p.nu, p.mu + 1.0)?)
}

/// The integral representation at x = r/support, with ln B(2ν, μ+1) given.
fn integral_value(x: f64, nu: f64, mu: f64, ln_b: f64) -> Result<f64> {
    if x >= 1.0 {
        return Ok(0.0);
    }
    let x2 = x * x;
    let big_t = (1.0 - x) * (1.0 + x);
    // With t = u² − x² the integral is ½∫_0^T t^{ν−1}(1 − √(t + x²))^μ dt;
    // t = T s^{1/ν} then removes the t^{ν−1} endpoint singularity:
    // ½ T^ν/ν ∫_0^1 (1 − √(t + x²))^μ ds, with 1 − √(t + x²) = (T − t)/(1 + √(t + x²)).
    let inv_nu = 1.0 / nu;
    let mut g = |s: f64| {
        if s <= 0.0 {
            return (1.0 - x).powf(mu);
        }
        let ln_s = s.ln();
        let frac = (ln_s * inv_nu).exp();
        let t = big_t * frac;
        let gap = big_t * -(ln_s * inv_nu).exp_m1() / (1.0 + (t + x2).sqrt());
        if gap <= 0.0 {
            0.0
        } else {
            gap.powf(mu)
        }
    };
    let ln_scale = nu * big_t.ln() - (2.0 * nu).ln() - ln_b;
    // geometric breakpoints resolve the mass that concentrates near s = 0 for large μ
    let mut breaks = vec![0.0];
    let mut b = 2f64.powi(-60);
    while b < 0.5 {
        breaks.push(b);
        b *= 4.0;
    }
    breaks.push(0.5);
    breaks.push(1.0);
    let opts = QuadOptions {
        abs_tol: 1e-14 * (-ln_scale).exp(),
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let res = integrate_with_breaks(&mut g, &breaks, &opts)?;
    Ok((ln_scale + res.value.ln()).exp())
}
