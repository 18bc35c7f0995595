//! Radial Fourier (Hankel) transforms in d = 1, 2, 3.
//!
//! With k_d(u, z) = z^{1−d/2} u^{d/2} J_{d/2−1}(uz),
//! φ̂(z) = (2π)^{−d/2} ∫_0^∞ k_d(u, z) φ(u) du and
//! φ(r) = (2π)^{d/2} ∫_0^∞ k_d(z, r) φ̂(z) dz.
//! Oscillatory integrals are split at the zeros of the Bessel factor; for
//! infinite ranges the alternating panel sums are accelerated with Wynn's
//! epsilon algorithm.

use std::cell::RefCell;
use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{Error, Result};
use crate::quad::{integrate_with_breaks, wynn_epsilon, QuadOptions};
use crate::specfun::bessel_j0;

use super::check_dim;

const MAX_PANELS: usize = 4000;

/// k_d(u, z) including the z → 0 limit u^{d−1} 2^{1−d/2}/Γ(d/2).
pub(crate) fn radial_kernel(dim: usize, u: f64, z: f64) -> f64 {
    let c = FRAC_2_PI.sqrt();
    match dim {
        1 => c * (u * z).cos(),
        2 => u * bessel_j0(u * z),
        _ => {
            if z == 0.0 {
                c * u * u
            } else {
                c * u * (u * z).sin() / z
            }
        }
    }
}

/// k-th positive zero (k ≥ 1) of the oscillating factor of k_d, in units
/// of the product u·z. J0 zeros use McMahon's expansion.
fn oscillation_zero(dim: usize, k: usize) -> f64 {
    let k = k as f64;
    match dim {
        1 => (k - 0.5) * PI,
        2 => {
            let b = (k - 0.25) * PI;
            b + 1.0 / (8.0 * b) - 31.0 / (384.0 * b * b * b)
        }
        _ => k * PI,
    }
}

fn forward_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        max_intervals: 400,
    }
}

// the inverse integrates a density that is itself a quadrature result
fn inverse_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_intervals: 400,
    }
}

/// ∫_0^limit k_d(u, z) f(u) du for an integrand that may oscillate, with
/// `limit = None` meaning infinity. `scale` is the length over which f
/// varies, used only when z is small enough that f decays before the
/// kernel oscillates.
pub(crate) fn oscillatory_integral<F>(
    f: &F,
    dim: usize,
    z: f64,
    limit: Option<f64>,
    scale: f64,
    opts: &QuadOptions,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mut g = |u: f64| match f(u) {
        Ok(v) => {
            if v == 0.0 {
                0.0
            } else {
                radial_kernel(dim, u, z) * v
            }
        }
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };

    if let Some(end) = limit {
        let mut breaks: Vec<f64> = (0..8).map(|i| end * i as f64 / 8.0).collect();
        if z > 0.0 {
            let mut k = 1;
            loop {
                let b = oscillation_zero(dim, k) / z;
                if b >= end || k > 50 * MAX_PANELS {
                    break;
                }
                breaks.push(b);
                k += 1;
            }
        }
        breaks.push(end);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let res = integrate_with_breaks(&mut g, &breaks, opts);
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        return Ok(res?.value);
    }

    let negligible = |v: f64, largest: f64| v.abs() <= opts.abs_tol.max(1e-16 * largest);
    let mut total = 0.0;
    let mut largest: f64 = 0.0;
    let mut start = 0.0;
    let first = if z == 0.0 {
        f64::INFINITY
    } else {
        oscillation_zero(dim, 1) / z
    };
    if first > 4.0 * scale {
        // the integrand decays before the kernel oscillates: panels of
        // doubling width until their contributions become negligible
        let mut quiet = 0;
        let mut width = scale;
        let mut count = 0;
        while start < first && quiet < 3 {
            if count >= MAX_PANELS {
                return Err(Error::Quadrature("integrand does not decay".into()));
            }
            let e = (start + width).min(first);
            let v = integrate_with_breaks(&mut g, &[start, e], opts)?.value;
            if let Some(e) = failure.borrow_mut().take() {
                return Err(e);
            }
            total += v;
            largest = largest.max(v.abs());
            quiet = if negligible(v, largest) { quiet + 1 } else { 0 };
            start = e;
            width = start;
            count += 1;
        }
        if quiet >= 3 || z == 0.0 {
            return Ok(total);
        }
    }
    let mut k = 1;
    while oscillation_zero(dim, k) / z <= start {
        k += 1;
    }
    let mut lo = start;
    let mut quiet = 0;
    let mut partial: Vec<f64> = Vec::new();
    let mut last_wynn = f64::NAN;
    for panel in 0..MAX_PANELS {
        let hi = oscillation_zero(dim, k) / z;
        k += 1;
        let v = integrate_with_breaks(&mut g, &[lo, hi], opts)?.value;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        total += v;
        partial.push(total);
        lo = hi;
        largest = largest.max(v.abs());
        quiet = if negligible(v, largest) { quiet + 1 } else { 0 };
        if quiet >= 4 {
            return Ok(total);
        }
        if panel >= 30 && panel % 10 == 0 {
            let est = wynn_epsilon(&partial[partial.len() - 30..]);
            if (est - last_wynn).abs() <= 1e-13 * est.abs().max(1e-300) {
                return Ok(est);
            }
            last_wynn = est;
        }
    }
    if last_wynn.is_finite() {
        log::warn!("oscillatory integral: panel budget exhausted, returning accelerated estimate");
        return Ok(last_wynn);
    }
    Err(Error::Quadrature("oscillatory integral did not converge".into()))
}

/// Isotropic spectral density of the correlation `rho` at frequency z in
/// dimension `dim`. `support` restricts the integral for compactly
/// supported correlations; `scale` is a characteristic length of `rho`.
pub fn hankel_forward<F>(rho: F, support: Option<f64>, scale: f64, z: f64, dim: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    check_dim(dim)?;
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::domain(
            "hankel_forward",
            format!("frequency z = {z} must be nonnegative"),
        ));
    }
    let norm = (2.0 * PI).powf(-(dim as f64) / 2.0);
    Ok(norm * oscillatory_integral(&rho, dim, z, support, scale, &forward_options())?)
}

/// Correlation at lag r recovered from a spectral density `density`
/// whose characteristic frequency scale is `freq_scale`.
pub fn hankel_inverse<F>(density: F, freq_scale: f64, r: f64, dim: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    check_dim(dim)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::domain(
            "hankel_inverse",
            format!("lag r = {r} must be nonnegative"),
        ));
    }
    let norm = (2.0 * PI).powf(dim as f64 / 2.0);
    Ok(norm * oscillatory_integral(&density, dim, r, None, freq_scale, &inverse_options())?)
}
