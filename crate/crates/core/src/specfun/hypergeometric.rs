//! Gauss ₂F₁ and ₁F₂ series.
//!
//! ₂F₁ sums its power series directly for z ≤ 1/2 and otherwise applies the
//! 1−z linear transformation. Partial sums are carried as a mantissa and a
//! natural-log scale so parameters in the hundreds do not overflow.
//! ₁F₂ with a negative argument is an alternating series whose terms grow
//! like e^{2√|x|} before decaying; it is summed in double-double.

use super::dd::Dd;
use super::gamma::{digamma, ln_gamma_signed};
use super::SeriesControl;
use crate::error::{Error, Result};

/// Largest |x| accepted by [`hyp1f2`].
pub const HYP1F2_CAP: f64 = 400.0;

/// Distance of c − a − b from an integer below which the 1−z
/// transformation is treated as degenerate.
const DEGENERATE_WINDOW: f64 = 1e-4;
/// Offset spacing used to interpolate across a degenerate c.
const DEGENERATE_STEP: f64 = 4e-3;
const DEGENERATE_NODES: [f64; 6] = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];

const RESCALE: f64 = 1e200;
const LN_RESCALE: f64 = 460.517_018_598_809_1;

/// A value represented as `mantissa · exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn new(x: f64) -> Self {
        Scaled {
            mantissa: x,
            log_scale: 0.0,
        }
    }

    pub fn value(self) -> f64 {
        if self.mantissa == 0.0 {
            return 0.0;
        }
        self.mantissa * self.log_scale.exp()
    }

    /// ln|value|; −∞ for zero.
    pub fn ln_abs(self) -> f64 {
        self.mantissa.abs().ln() + self.log_scale
    }

    fn add(self, other: Scaled) -> Scaled {
        if self.mantissa == 0.0 {
            return other;
        }
        if other.mantissa == 0.0 {
            return self;
        }
        let e = self.log_scale.max(other.log_scale);
        Scaled {
            mantissa: self.mantissa * (self.log_scale - e).exp() + other.mantissa * (other.log_scale - e).exp(),
            log_scale: e,
        }
    }
}

/// Which evaluation route produced a ₂F₁ value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hyp2f1Path {
    Direct,
    Reflected,
}

/// ₂F₁ value with evaluation metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyp2f1Value {
    pub value: f64,
    pub path: Hyp2f1Path,
    pub terms: usize,
    /// Offset spacing applied to c when c − a − b sat on an integer and the
    /// result was interpolated from shifted evaluations.
    pub perturbation: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct SeriesSum {
    sum: Scaled,
    terms: usize,
    /// ln of the largest term magnitude, for cancellation estimates.
    ln_max_term: f64,
}

fn series_2f1(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<SeriesSum> {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut scale = 0.0f64;
    let mut ln_max = 0.0f64;
    let mut small = 0;
    for k in 0..ctl.max_terms {
        let fk = k as f64;
        let den = (c + fk) * (fk + 1.0);
        if den == 0.0 {
            return Err(Error::domain("hyp2f1", format!("c = {c} is a non-positive integer")));
        }
        let ratio = (a + fk) * (b + fk) / den * z;
        term *= ratio;
        sum += term;
        if term.abs() > RESCALE || sum.abs() > RESCALE {
            term /= RESCALE;
            sum /= RESCALE;
            scale += LN_RESCALE;
        }
        let ln_t = term.abs().ln() + scale;
        if ln_t > ln_max {
            ln_max = ln_t;
        }
        let negligible = term.abs() <= ctl.rel_tol * sum.abs() || term.abs() * scale.exp() <= ctl.abs_tol;
        if negligible && ratio.abs() < 1.0 {
            small += 1;
            if small >= 2 {
                return Ok(SeriesSum {
                    sum: Scaled {
                        mantissa: sum,
                        log_scale: scale,
                    },
                    terms: k + 1,
                    ln_max_term: ln_max,
                });
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NonConvergence {
        function: "hyp2f1",
        terms: ctl.max_terms,
    })
}

fn check_args(c: f64, z: f64) -> Result<()> {
    if !c.is_finite() || (c <= 0.0 && c == c.floor()) {
        return Err(Error::domain(
            "hyp2f1",
            format!("c = {c} must not be a non-positive integer"),
        ));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain("hyp2f1", format!("z = {z} outside [0, 1]")));
    }
    Ok(())
}

/// Power series of ₂F₁ at z, valid for 0 ≤ z < 1 (slow near 1).
pub fn hyp2f1_direct(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    check_args(c, z)?;
    if z == 1.0 {
        return Err(Error::domain("hyp2f1_direct", "series does not converge at z = 1"));
    }
    Ok(series_2f1(a, b, c, z, ctl)?.sum.value())
}

/// ln|1/Γ(x)| and its sign, or `None` when 1/Γ(x) = 0.
fn ln_rgamma(x: f64) -> Result<Option<(f64, f64)>> {
    if x <= 0.0 && x == x.floor() {
        return Ok(None);
    }
    let (lg, sign) = ln_gamma_signed(x)?;
    Ok(Some((-lg, sign)))
}

/// ln of the absolute rounding error expected when a coefficient whose log
/// was assembled from log-gamma values of total size `ln_terms` multiplies
/// a series whose largest term has log-magnitude `ln_mag`.
fn ln_error(ln_mag: f64, ln_terms: f64) -> f64 {
    ln_mag + (f64::EPSILON * (4.0 + ln_terms)).ln()
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Scaled result of the 1−z transformation with its term count and the
/// log of an absolute error estimate.
#[derive(Debug, Clone, Copy)]
struct Reflected {
    value: Scaled,
    terms: usize,
    ln_err: f64,
}

/// One-sided 1−z transformation, assuming c − a − b is not an integer.
fn reflected_nondegenerate(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<Reflected> {
    let w = 1.0 - z;
    let s = c - a - b;
    let (lgc, sgc) = ln_gamma_signed(c)?;
    let mut total = Scaled::new(0.0);
    let mut terms = 0;
    let mut ln_err = f64::NEG_INFINITY;

    // A · F(a, b; 1 − s; w)
    if let (Some((ra, sa)), Some((rb, sb))) = (ln_rgamma(c - a)?, ln_rgamma(c - b)?) {
        let (lgs, sgs) = ln_gamma_signed(s)?;
        let series = if w == 0.0 {
            SeriesSum {
                sum: Scaled::new(1.0),
                terms: 0,
                ln_max_term: 0.0,
            }
        } else {
            series_2f1(a, b, 1.0 - s, w, ctl)?
        };
        terms += series.terms;
        let ln_coef = lgc + lgs + ra + rb;
        total = total.add(Scaled {
            mantissa: sgc * sgs * sa * sb * series.sum.mantissa,
            log_scale: ln_coef + series.sum.log_scale,
        });
        let size = lgc.abs() + lgs.abs() + ra.abs() + rb.abs();
        ln_err = ln_add_exp(ln_err, ln_error(ln_coef + series.ln_max_term, size));
    }

    // B · w^s · F(c − a, c − b; 1 + s; w)
    if w > 0.0 {
        if let (Some((ra, sa)), Some((rb, sb))) = (ln_rgamma(a)?, ln_rgamma(b)?) {
            let (lgm, sgm) = ln_gamma_signed(-s)?;
            let series = series_2f1(c - a, c - b, 1.0 + s, w, ctl)?;
            terms += series.terms;
            let ln_coef = lgc + lgm + ra + rb + s * w.ln();
            total = total.add(Scaled {
                mantissa: sgc * sgm * sa * sb * series.sum.mantissa,
                log_scale: ln_coef + series.sum.log_scale,
            });
            let size = lgc.abs() + lgm.abs() + ra.abs() + rb.abs() + (s * w.ln()).abs();
            ln_err = ln_add_exp(ln_err, ln_error(ln_coef + series.ln_max_term, size));
        }
    } else if s <= 0.0 {
        return Err(Error::domain("hyp2f1", "c - a - b must be positive at z = 1"));
    }
    Ok(Reflected {
        value: total,
        terms,
        ln_err,
    })
}

/// 1−z transformation when c = a + b + m exactly, m ≥ 1 an integer and
/// a, b > 0: the finite sum plus the logarithmic series
/// −(z−1)^m Γ(c)/(Γ(a)Γ(b)) Σ (a+m)_n (b+m)_n/(n!(n+m)!) w^n
///   · [ln w − ψ(n+1) − ψ(n+m+1) + ψ(a+n+m) + ψ(b+n+m)],  w = 1 − z.
fn reflected_log_case(a: f64, b: f64, m: usize, z: f64, ctl: &SeriesControl) -> Result<Reflected> {
    let w = 1.0 - z;
    let mf = m as f64;
    let c = a + b + mf;
    let lgc = ln_gamma_signed(c)?.0;

    // Γ(m)Γ(c)/(Γ(a+m)Γ(b+m)) Σ_{n<m} (a)_n (b)_n/(n! (1−m)_n) w^n
    let lga = ln_gamma_signed(a + mf)?.0;
    let lgb = ln_gamma_signed(b + mf)?.0;
    let ln_coef_a = ln_gamma_signed(mf)?.0 + lgc - lga - lgb;
    let mut finite = 0.0;
    let mut term = 1.0;
    let mut ln_max_a = f64::NEG_INFINITY;
    for n in 0..m {
        let nf = n as f64;
        if n > 0 {
            term *= (a + nf - 1.0) * (b + nf - 1.0) / (nf * (nf - mf)) * w;
        }
        finite += term;
        ln_max_a = ln_max_a.max(term.abs().ln());
    }
    let part_a = Scaled {
        mantissa: finite,
        log_scale: ln_coef_a,
    };
    let size_a = lgc.abs() + lga.abs() + lgb.abs();

    // logarithmic series, with terms rescaled like the plain series
    let ln_w = w.ln();
    let mut t = 1.0;
    for k in 1..=m {
        t /= k as f64;
    }
    let mut psi_1 = digamma(1.0)?;
    let mut psi_m = digamma(mf + 1.0)?;
    let mut psi_a = digamma(a + mf)?;
    let mut psi_b = digamma(b + mf)?;
    let mut sum = 0.0f64;
    let mut scale = 0.0f64;
    let mut ln_max = f64::NEG_INFINITY;
    let mut small = 0;
    let mut terms = 0;
    for n in 0..ctl.max_terms {
        let nf = n as f64;
        let bracket = ln_w - psi_1 - psi_m + psi_a + psi_b;
        let contrib = t * bracket;
        sum += contrib;
        if t.abs() > RESCALE || sum.abs() > RESCALE {
            t /= RESCALE;
            sum /= RESCALE;
            scale += LN_RESCALE;
        }
        ln_max = ln_max.max(contrib.abs().ln() + scale);
        terms = n + 1;
        let ratio = (a + mf + nf) * (b + mf + nf) / ((nf + 1.0) * (nf + mf + 1.0)) * w;
        if (contrib.abs() <= ctl.rel_tol * sum.abs() || contrib.abs() * scale.exp() <= ctl.abs_tol) && ratio < 1.0 {
            small += 1;
            if small >= 2 {
                break;
            }
        } else {
            small = 0;
        }
        if n + 1 == ctl.max_terms {
            return Err(Error::NonConvergence {
                function: "hyp2f1",
                terms: ctl.max_terms,
            });
        }
        t *= ratio;
        psi_1 += 1.0 / (nf + 1.0);
        psi_m += 1.0 / (nf + mf + 1.0);
        psi_a += 1.0 / (a + mf + nf);
        psi_b += 1.0 / (b + mf + nf);
    }
    let lg_a = ln_gamma_signed(a)?.0;
    let lg_b = ln_gamma_signed(b)?.0;
    let ln_coef_b = lgc - lg_a - lg_b + mf * ln_w;
    // −(z − 1)^m = −(−1)^m w^m
    let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
    let part_b = Scaled {
        mantissa: sign * sum,
        log_scale: ln_coef_b + scale,
    };
    let size_b = lgc.abs() + lg_a.abs() + lg_b.abs() + (mf * ln_w).abs();
    let ln_err = ln_add_exp(
        ln_error(ln_coef_a + ln_max_a, size_a),
        ln_error(ln_coef_b + ln_max, size_b),
    );
    Ok(Reflected {
        value: part_a.add(part_b),
        terms,
        ln_err,
    })
}

fn lagrange_weights_at_zero(nodes: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &xk)| -xk / (xj - xk))
                .product()
        })
        .collect()
}

/// Degeneracy-aware 1−z transformation. Returns the result and the
/// perturbation spacing if interpolation was needed.
fn reflected(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<(Reflected, Option<f64>)> {
    check_args(c, z)?;
    let s = c - a - b;
    if (s - s.round()).abs() >= DEGENERATE_WINDOW {
        return Ok((reflected_nondegenerate(a, b, c, z, ctl)?, None));
    }
    if z == 1.0 && s <= 0.5 {
        return Err(Error::domain("hyp2f1", "c - a - b must be positive at z = 1"));
    }
    let m = s.round();
    let exact = (s - m).abs() <= 64.0 * f64::EPSILON * (a.abs() + b.abs() + c.abs());
    if exact && m >= 1.0 && a > 0.0 && b > 0.0 && z < 1.0 {
        return Ok((reflected_log_case(a, b, m as usize, z, ctl)?, None));
    }
    // F is analytic in c: interpolate from shifted evaluations back to c.
    let weights = lagrange_weights_at_zero(&DEGENERATE_NODES);
    let mut acc = Reflected {
        value: Scaled::new(0.0),
        terms: 0,
        ln_err: f64::NEG_INFINITY,
    };
    for (node, wgt) in DEGENERATE_NODES.iter().zip(weights) {
        let r = reflected_nondegenerate(a, b, c + node * DEGENERATE_STEP, z, ctl)?;
        acc.terms += r.terms;
        acc.value = acc.value.add(Scaled {
            mantissa: r.value.mantissa * wgt,
            log_scale: r.value.log_scale,
        });
        acc.ln_err = ln_add_exp(acc.ln_err, r.ln_err + wgt.abs().ln());
    }
    Ok((acc, Some(DEGENERATE_STEP)))
}

/// 1−z transformation of ₂F₁, valid for 0 ≤ z ≤ 1 (slow near 0).
pub fn hyp2f1_reflected(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    Ok(reflected(a, b, c, z, ctl)?.0.value.value())
}

/// Relative error above which a reflected evaluation is replaced by the
/// direct series.
const REFLECTED_REL_ERR: f64 = 1e-11;

/// Scaled ₂F₁ for z ∈ [0, 1]. For z > 1/2 the 1−z transformation is tried
/// first; when its estimated absolute error exceeds `exp(ln_err_limit)`
/// (default: a relative error of 1e-11) the direct series is summed instead
/// with a term budget of `direct_budget`, and `NonConvergence` is returned
/// if that budget runs out.
pub(crate) fn hyp2f1_scaled(
    a: f64,
    b: f64,
    c: f64,
    z: f64,
    ctl: &SeriesControl,
    direct_budget: usize,
    ln_err_limit: Option<f64>,
) -> Result<(Scaled, Hyp2f1Value)> {
    ctl.validate()?;
    check_args(c, z)?;
    if z == 0.0 {
        let info = Hyp2f1Value {
            value: 1.0,
            path: Hyp2f1Path::Direct,
            terms: 0,
            perturbation: None,
        };
        return Ok((Scaled::new(1.0), info));
    }
    if z <= 0.5 {
        let s = series_2f1(a, b, c, z, ctl)?;
        let info = Hyp2f1Value {
            value: s.sum.value(),
            path: Hyp2f1Path::Direct,
            terms: s.terms,
            perturbation: None,
        };
        return Ok((s.sum, info));
    }
    let (r, perturbation) = reflected(a, b, c, z, ctl)?;
    let limit = ln_err_limit.unwrap_or(REFLECTED_REL_ERR.ln() + r.value.ln_abs());
    let inaccurate = r.ln_err > limit || (r.value.mantissa <= 0.0 && a > 0.0 && b > 0.0);
    if inaccurate && z < 1.0 {
        let big = SeriesControl {
            max_terms: ctl.max_terms.max(direct_budget),
            ..*ctl
        };
        let s = series_2f1(a, b, c, z, &big)?;
        let info = Hyp2f1Value {
            value: s.sum.value(),
            path: Hyp2f1Path::Direct,
            terms: s.terms + r.terms,
            perturbation: None,
        };
        return Ok((s.sum, info));
    }
    let info = Hyp2f1Value {
        value: r.value.value(),
        path: Hyp2f1Path::Reflected,
        terms: r.terms,
        perturbation,
    };
    Ok((r.value, info))
}

/// Term budget for the direct series when the 1−z route cancels badly.
const DIRECT_FALLBACK_TERMS: usize = 2_000_000;

/// ₂F₁(a, b; c; z) for z ∈ [0, 1] with evaluation metadata.
pub fn hyp2f1_with(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<Hyp2f1Value> {
    Ok(hyp2f1_scaled(a, b, c, z, ctl, DIRECT_FALLBACK_TERMS, None)?.1)
}

/// ₂F₁(a, b; c; z) for z ∈ [0, 1] with default series control.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    Ok(hyp2f1_with(a, b, c, z, &SeriesControl::default())?.value)
}

/// ₁F₂(a; b, c; x) with explicit series control.
pub fn hyp1f2_with(a: f64, b: f64, c: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    ctl.validate()?;
    if !(b > 0.0) || !(c > 0.0) {
        return Err(Error::domain("hyp1f2", format!("b = {b}, c = {c} must be positive")));
    }
    if !x.is_finite() {
        return Err(Error::domain("hyp1f2", "non-finite argument"));
    }
    if x.abs() > HYP1F2_CAP {
        return Err(Error::PrecisionLoss {
            function: "hyp1f2",
            argument: x.abs(),
            cap: HYP1F2_CAP,
        });
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    let mut small = 0;
    for k in 0..ctl.max_terms {
        let fk = k as f64;
        let num = Dd::sum(a, fk) * x;
        let den = Dd::sum(b, fk) * Dd::sum(c, fk) * (fk + 1.0);
        term = term * num / den;
        sum = sum + term;
        let t = term.hi.abs();
        let ratio_small = ((a + fk + 1.0) * x).abs() < ((b + fk + 1.0) * (c + fk + 1.0) * (fk + 2.0));
        if (t <= ctl.rel_tol * sum.hi.abs() || t <= ctl.abs_tol) && ratio_small {
            small += 1;
            if small >= 2 {
                return Ok(sum.to_f64());
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NonConvergence {
        function: "hyp1f2",
        terms: ctl.max_terms,
    })
}

/// ₁F₂(a; b, c; x) for |x| ≤ [`HYP1F2_CAP`].
pub fn hyp1f2(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    hyp1f2_with(a, b, c, x, &SeriesControl::default())
}
