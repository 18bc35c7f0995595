//! Modified Bessel function of the second kind K_ν(x) for real ν ≥ 0.
//!
//! The order is split as ν = n + μ with |μ| ≤ 1/2. K_μ and K_{μ+1} come
//! from Temme's series for x ≤ 2 and Steed's continued fraction above,
//! then forward recurrence (stable for K) lifts them to order ν.

use std::f64::consts::PI;

use super::gamma::temme_gammas;
use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;
const SERIES_LIMIT: f64 = 2.0;

/// Returns (K_μ(x), K_{μ+1}(x)) multiplied by e^x when `scaled`.
fn k_pair(mu: f64, x: f64, scaled: bool) -> Result<(f64, f64)> {
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let mu2 = mu * mu;
    if x <= SERIES_LIMIT {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        let mut converged = false;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - fi * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                function: "bessel_k",
                terms: MAX_ITER,
            });
        }
        let scale = if scaled { x.exp() } else { 1.0 };
        Ok((sum * scale, sum1 * xi2 * scale))
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        let mut converged = false;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * fi;
            c = -a * c / (fi + 1.0);
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                function: "bessel_k",
                terms: MAX_ITER,
            });
        }
        h *= a1;
        let pref = (PI / (2.0 * x)).sqrt() / s;
        let kmu = if scaled { pref } else { pref * (-x).exp() };
        let k1 = kmu * (mu + x + 0.5 - h) * xi;
        Ok((kmu, k1))
    }
}

fn bessel_k_impl(order: f64, x: f64, scaled: bool) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("bessel_k", format!("x = {x} must be positive")));
    }
    if !(order >= 0.0) || !order.is_finite() {
        return Err(Error::domain(
            "bessel_k",
            format!("order = {order} must be nonnegative"),
        ));
    }
    let n = (order + 0.5).floor();
    let mu = order - n;
    let (mut kmu, mut k1) = k_pair(mu, x, scaled)?;
    let xi2 = 2.0 / x;
    for i in 1..=(n as usize) {
        let next = (mu + i as f64) * xi2 * k1 + kmu;
        kmu = k1;
        k1 = next;
    }
    Ok(kmu)
}

/// K_ν(x). Overflow for x → 0⁺ at large order saturates to +∞.
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    bessel_k_impl(order, x, false)
}

/// e^x K_ν(x), free of underflow for large x.
pub fn bessel_k_scaled(order: f64, x: f64) -> Result<f64> {
    bessel_k_impl(order, x, true)
}

/// J_0(x).
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}
