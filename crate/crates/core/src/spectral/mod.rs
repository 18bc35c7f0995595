//! Isotropic spectral densities of the Matérn and generalized Wendland
//! families, the Hankel transform linking correlations and spectra, the
//! normalization identity shared by both families, and convergence
//! diagnostics of φ towards Matérn.

mod convergence;
mod hankel;

pub use convergence::{
    convergence_cell, convergence_table, default_z_grid, spectral_convergence, sup_gap, ConvergenceCell,
    ConvergenceReport, MuColumn, SupGap, TABLE_DIM,
};
pub use hankel::{hankel_forward, hankel_inverse};

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::kernels::{lambda, GenWendlandParams, MaternParams, PhiParams};
use crate::quad::{integrate_half_line, integrate_with_breaks, QuadOptions};
use crate::specfun::{hyp1f2, ln_gamma_signed, log_gamma, HYP1F2_CAP};

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dimension {dim} must be 1, 2 or 3")))
    }
}

/// A frequency z ≥ 0 in dimension d ∈ {1, 2, 3}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralQuery {
    pub z: f64,
    pub dim: usize,
}

impl SpectralQuery {
    pub fn new(z: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(z >= 0.0) || !z.is_finite() {
            return Err(Error::domain(
                "spectral",
                format!("frequency z = {z} must be finite and nonnegative"),
            ));
        }
        Ok(SpectralQuery { z, dim })
    }
}

/// Matérn spectral density Γ(ν + d/2)/(π^{d/2}Γ(ν)) · β^d/(1 + β²z²)^{ν+d/2}.
pub fn matern_spectral(q: &SpectralQuery, p: &MaternParams) -> f64 {
    let d = q.dim as f64;
    let ln_c = ln_gamma_pos(p.nu + d / 2.0) - ln_gamma_pos(p.nu) - d / 2.0 * PI.ln();
    let bz = p.beta * q.z;
    (ln_c + d * p.beta.ln() - (p.nu + d / 2.0) * (bz * bz).ln_1p()).exp()
}

fn ln_gamma_pos(x: f64) -> f64 {
    // only called with arguments validated positive
    log_gamma(x).unwrap_or(f64::NAN)
}

/// ln L for the generalized Wendland density, with Γ(ν)/Γ(2ν) → 2 at ν = 0.
fn ln_gw_constant(nu: f64, mu: f64, dim: usize) -> Result<f64> {
    let d = dim as f64;
    let ratio = if nu == 0.0 {
        LN_2
    } else {
        log_gamma(nu)? - log_gamma(2.0 * nu)?
    };
    Ok(
        -d * LN_2 - d / 2.0 * PI.ln() + log_gamma(mu + 2.0 * nu + 1.0)? + log_gamma(2.0 * nu + d)? + ratio
            - log_gamma(nu + d / 2.0)?
            - log_gamma(mu + 2.0 * nu + d + 1.0)?,
    )
}

fn check_gw_dim(q: &SpectralQuery, p: &GenWendlandParams) -> Result<()> {
    let lam = lambda(q.dim, p.nu);
    if p.mu < lam {
        return Err(Error::InvalidParameter(format!(
            "mu = {} is below lambda(d={}, nu={}) = {lam}",
            p.mu, q.dim, p.nu
        )));
    }
    Ok(())
}

/// Generalized Wendland spectral density
/// L·S^d·₁F₂(λ; λ + μ/2, λ + (μ+1)/2; −(zS)²/4), with S the support.
/// Beyond the ₁F₂ cap the density is computed by Hankel transform of the
/// correlation.
pub fn gw_spectral(q: &SpectralQuery, p: &GenWendlandParams) -> Result<f64> {
    check_gw_dim(q, p)?;
    let d = q.dim as f64;
    let scale = (ln_gw_constant(p.nu, p.mu, q.dim)? + d * p.support.ln()).exp();
    let x = 0.25 * (q.z * p.support).powi(2);
    let value = if x <= HYP1F2_CAP {
        let lam = lambda(q.dim, p.nu);
        scale * hyp1f2(lam, lam + p.mu / 2.0, lam + (p.mu + 1.0) / 2.0, -x)?
    } else {
        let kernel = crate::kernels::Family::GenWendland(*p).kernel()?;
        hankel_forward(|u| kernel.eval(u), Some(p.support), p.support, q.z, q.dim)?
    };
    clamp_density(value, scale)
}

/// Spectral density of φ_{ν,μ,β} (the Wendland density at support δ).
pub fn phi_spectral(q: &SpectralQuery, p: &PhiParams) -> Result<f64> {
    gw_spectral(q, &p.to_gen_wendland()?)
}

// Round-off can push a density that vanishes (or nearly so) slightly below
// zero; anything beyond that is a genuine numerical failure.
fn clamp_density(value: f64, scale: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value > -1e-10 * scale {
        Ok(0.0)
    } else {
        Err(Error::Quadrature(format!(
            "spectral density evaluated to {value:e}, below the round-off floor"
        )))
    }
}

/// Model handed to [`unit_variance_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralModel {
    Matern(MaternParams),
    GenWendland(GenWendlandParams),
    Phi(PhiParams),
}

/// Γ(d/2)/(2π^{d/2}), the value of ∫_0^∞ z^{d−1} φ̂(z) dz for any
/// correlation with φ(0) = 1.
pub fn unit_variance_target(dim: usize) -> f64 {
    let d = dim as f64;
    (ln_gamma_pos(d / 2.0) - d / 2.0 * PI.ln()).exp() / 2.0
}

/// |∫_0^∞ z^{d−1} φ̂(z) dz − Γ(d/2)/(2π^{d/2})|, integrating the density
/// numerically.
///
/// For the Wendland families the substitution y = zS removes the support,
/// the body y ≤ 40 is integrated with the ₁F₂ series and the tail with the
/// large-argument expansion of ₁F₂. The expansion requires μ to be moderate
/// (roughly μ ≤ 20); otherwise `NonConvergence` is returned.
pub fn unit_variance_check(model: &SpectralModel, dim: usize) -> Result<f64> {
    check_dim(dim)?;
    let integral = match model {
        SpectralModel::Matern(p) => matern_radial_integral(p.nu, dim)?,
        SpectralModel::GenWendland(p) => {
            check_gw_dim(&SpectralQuery::new(0.0, dim)?, p)?;
            gw_radial_integral(p.nu, p.mu, dim)?
        }
        SpectralModel::Phi(p) => {
            check_gw_dim(&SpectralQuery::new(0.0, dim)?, &p.to_gen_wendland()?)?;
            gw_radial_integral(p.nu, p.mu, dim)?
        }
    };
    Ok((integral - unit_variance_target(dim)).abs())
}

fn matern_radial_integral(nu: f64, dim: usize) -> Result<f64> {
    let d = dim as f64;
    let c = (log_gamma(nu + d / 2.0)? - log_gamma(nu)? - d / 2.0 * PI.ln()).exp();
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    let r = integrate_half_line(
        |y: f64| y.powi(dim as i32 - 1) * (-(nu + d / 2.0) * (y * y).ln_1p()).exp(),
        0.0,
        &opts,
    )?;
    Ok(c * r.value)
}

const BODY_END: f64 = 40.0;

fn gw_radial_integral(nu: f64, mu: f64, dim: usize) -> Result<f64> {
    let d = dim as f64;
    let a = lambda(dim, nu);
    let b1 = a + mu / 2.0;
    let b2 = a + (mu + 1.0) / 2.0;
    let ln_l = ln_gw_constant(nu, mu, dim)?;

    let mut failure: Option<Error> = None;
    let mut f = |y: f64| match hyp1f2(a, b1, b2, -0.25 * y * y) {
        Ok(v) => y.powi(dim as i32 - 1) * v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let breaks: Vec<f64> = (0..=((BODY_END / PI).ceil() as usize))
        .map(|k| (k as f64 * PI).min(BODY_END))
        .collect();
    let opts = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_intervals: 2000,
    };
    let body = integrate_with_breaks(&mut f, &breaks, &opts);
    if let Some(e) = failure {
        return Err(e);
    }
    let body = body?.value;
    let (tail, tail_err) = hyp1f2_tail_moment(a, b1, b2, d - 1.0, BODY_END)?;
    let l = ln_l.exp();
    if l * tail_err > 1e-9 {
        return Err(Error::NonConvergence {
            function: "hyp1f2 tail expansion",
            terms: 200,
        });
    }
    Ok(l * (body + tail))
}

/// 1/Γ(x), zero at the poles.
fn rgamma(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.floor() {
        return Ok(0.0);
    }
    let (ln_abs, sign) = ln_gamma_signed(x)?;
    Ok(sign * (-ln_abs).exp())
}

/// ∫_Y^∞ y^s ₁F₂(a; b1, b2; −y²/4) dy from the large-argument expansion
/// ₁F₂(a; b1, b2; −x) ≈ Γ(b1)Γ(b2)/Γ(a) [Σ_k c_k x^{−a−k}
///   + π^{−1/2} x^χ cos(2√x + πχ)],  χ = (a − b1 − b2 + 1/2)/2,
/// with c_k = (−1)^k Γ(a + k)/(k! Γ(b1 − a − k) Γ(b2 − a − k)).
fn hyp1f2_tail_moment(a: f64, b1: f64, b2: f64, s: f64, y0: f64) -> Result<(f64, f64)> {
    let ln_g = log_gamma(b1)? + log_gamma(b2)? - log_gamma(a)?;
    let g = ln_g.exp();

    // algebraic part: ∫_Y^∞ y^s (y/2)^{−2a−2k} dy = 2^{2a+2k} Y^{s+1−2a−2k}/(2a+2k−s−1)
    let mut algebraic = 0.0;
    let mut converged = false;
    let mut prev = f64::INFINITY;
    let mut ln_fact = 0.0;
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            ln_fact += kf.ln();
        }
        let p = 2.0 * a + 2.0 * kf;
        let coef = (log_gamma(a + kf)? - ln_fact).exp() * rgamma(b1 - a - kf)? * rgamma(b2 - a - kf)?;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let moment = (p * LN_2 + (s + 1.0 - p) * y0.ln()).exp() / (p - s - 1.0);
        let term = sign * coef * moment;
        algebraic += term;
        if term.abs() <= 1e-15 * algebraic.abs().max(1e-300) {
            converged = true;
            break;
        }
        if term.abs() > prev && k > 2 {
            break;
        }
        prev = term.abs();
    }
    if !converged {
        return Err(Error::NonConvergence {
            function: "hyp1f2 tail expansion",
            terms: 60,
        });
    }

    // oscillatory part: 2^{−2χ} π^{−1/2} Re[e^{iπχ} ∫_Y^∞ y^{s+2χ} e^{iy} dy]
    let chi = (a - b1 - b2 + 0.5) / 2.0;
    let (ire, iim, ierr) = oscillatory_power_tail(s + 2.0 * chi, y0);
    let (c, sn) = ((PI * chi).cos(), (PI * chi).sin());
    let amplitude = (-2.0 * chi * LN_2).exp() / PI.sqrt();
    let oscillatory = amplitude * (c * ire - sn * iim);

    Ok((g * (algebraic + oscillatory), g * amplitude * ierr))
}

/// ∫_Y^∞ y^p e^{iy} dy for p < 0 by repeated integration by parts:
/// i e^{iY} Σ_n i^n p(p−1)…(p−n+1) Y^{p−n}, cut at the smallest term.
/// Returns (re, im, magnitude of the first omitted term).
fn oscillatory_power_tail(p: f64, y0: f64) -> (f64, f64, f64) {
    let mut re = 0.0;
    let mut im = 0.0;
    let mut mag = y0.powf(p);
    let mut n = 0;
    loop {
        // i^{n+1} cycles through i, −1, −i, 1
        let (ur, ui) = match n % 4 {
            0 => (0.0, 1.0),
            1 => (-1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (1.0, 0.0),
        };
        re += ur * mag;
        im += ui * mag;
        let next = mag * (p - n as f64) / y0;
        if next.abs() <= 1e-17 * re.hypot(im) || next.abs() >= mag.abs() || n >= 400 {
            let (c, s) = (y0.cos(), y0.sin());
            return (c * re - s * im, s * re + c * im, next.abs());
        }
        mag = next;
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{gw_askey, matern};

    fn q(z: f64, dim: usize) -> SpectralQuery {
        SpectralQuery::new(z, dim).unwrap()
    }

    #[test]
    fn matern_density_examples() {
        let p = MaternParams::new(0.5, 1.0).unwrap();
        assert!((matern_spectral(&q(1.0, 1), &p) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        for (nu, beta) in [(0.5, 1.0), (1.3, 0.4), (2.0, 2.5)] {
            let p = MaternParams::new(nu, beta).unwrap();
            let expect = nu * beta * beta / PI;
            assert!((matern_spectral(&q(0.0, 2), &p) - expect).abs() < 1e-14 * expect);
        }
        // algebraic decay of order 2ν + d
        let p = MaternParams::new(1.5, 1.0).unwrap();
        let ratio = matern_spectral(&q(2e4, 2), &p) / matern_spectral(&q(1e4, 2), &p);
        assert!((ratio - 2f64.powf(-5.0)).abs() < 1e-6);
    }

    #[test]
    fn gw_constant_askey_case() {
        assert!((ln_gw_constant(0.0, 4.0, 2).unwrap().exp() - 1.0 / (60.0 * PI)).abs() < 1e-16);
        let p = GenWendlandParams::new(0.0, 4.0, 1.0, 2).unwrap();
        assert!((gw_spectral(&q(0.0, 2), &p).unwrap() - 1.0 / (60.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn gw_density_matches_hankel_transform() {
        let p = GenWendlandParams::new(0.0, 4.0, 1.0, 2).unwrap();
        for z in [0.0, 1.0, 3.7, 12.0, 30.0] {
            let via_series = gw_spectral(&q(z, 2), &p).unwrap();
            let via_hankel = hankel_forward(|u| gw_askey(u, &p), Some(1.0), 1.0, z, 2).unwrap();
            assert!(
                (via_series - via_hankel).abs() < 1e-10,
                "z={z}: {via_series} vs {via_hankel}"
            );
        }
        for (nu, mu, dim) in [(1.0, 3.5, 1), (1.0, 4.0, 3), (2.0, 5.0, 2), (0.5, 4.0, 2)] {
            let p = GenWendlandParams::new(nu, mu, 0.7, dim).unwrap();
            let kernel = crate::kernels::Family::GenWendland(p).kernel().unwrap();
            for z in [0.0, 2.0, 9.0, 25.0] {
                let a = gw_spectral(&q(z, dim), &p).unwrap();
                let b = hankel_forward(|u| kernel.eval(u), Some(0.7), 0.7, z, dim).unwrap();
                assert!(
                    (a - b).abs() < 1e-10 * a.abs().max(1e-3),
                    "nu={nu} mu={mu} d={dim} z={z}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn gw_density_beyond_cap_uses_transform() {
        let p = GenWendlandParams::new(1.0, 4.0, 1.0, 2).unwrap();
        let below = gw_spectral(&q(39.0, 2), &p).unwrap();
        let above = gw_spectral(&q(41.0, 2), &p).unwrap();
        assert!(below > 0.0 && above > 0.0);
        assert!(above < below * 1.2);
    }

    #[test]
    fn matern_density_matches_hankel_transform() {
        let p = MaternParams::new(0.5, 1.0).unwrap();
        for dim in 1..=3 {
            for z in [0.0, 0.3, 1.0, 4.0] {
                let exact = matern_spectral(&q(z, dim), &p);
                let num = hankel_forward(|u| matern(u, &p), None, 1.0, z, dim).unwrap();
                assert!(
                    (exact - num).abs() < 1e-6 * exact.max(1e-6),
                    "d={dim} z={z}: {exact} vs {num}"
                );
            }
        }
    }

    #[test]
    fn roundtrip_gaussian_kernel() {
        let rho = |u: f64| Ok((-u * u).exp());
        for dim in 1..=3 {
            for r in [0.0, 0.5, 1.0, 2.0] {
                let back = hankel_inverse(|z| hankel_forward(rho, None, 1.0, z, dim), 1.0, r, dim).unwrap();
                assert!((back - (-r * r).exp()).abs() < 1e-5, "d={dim} r={r}: {back}");
            }
        }
    }

    #[test]
    fn densities_nonnegative() {
        for dim in 1..=3 {
            for (nu, extra) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.5), (2.5, 3.0)] {
                let mu = lambda(dim, nu) + extra;
                let p = GenWendlandParams::new(nu, mu, 1.0, dim).unwrap();
                for i in 0..200 {
                    let z = i as f64 * 0.2;
                    assert!(
                        gw_spectral(&q(z, dim), &p).unwrap() >= 0.0,
                        "nu={nu} mu={mu} d={dim} z={z}"
                    );
                }
            }
        }
    }

    #[test]
    fn unit_variance_targets() {
        assert!((unit_variance_target(1) - 0.5).abs() < 1e-15);
        assert!((unit_variance_target(2) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((unit_variance_target(3) - 1.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn unit_variance_matern_and_phi() {
        for dim in 1..=3 {
            for nu in [0.5, 1.5, 3.0] {
                let m = SpectralModel::Matern(MaternParams::new(nu, 0.8).unwrap());
                assert!(unit_variance_check(&m, dim).unwrap() < 1e-8, "Matern nu={nu} d={dim}");
            }
        }
        let p = PhiParams::new(1.0, 6.0, 1.0, 2).unwrap();
        assert!(unit_variance_check(&SpectralModel::Phi(p), 2).unwrap() < 1e-6);
    }

    #[test]
    fn tail_expansion_against_bessel_reduction() {
        // ₁F₂(a; a, 1; −y²/4) = J0(y): the c_k vanish and the tail is ∫_Y^∞ J0
        let (t, _) = hyp1f2_tail_moment(0.75, 0.75, 1.0, 0.0, 40.0).unwrap();
        let opts = QuadOptions::default();
        let head = crate::quad::integrate(|y: f64| crate::specfun::bessel_j0(y), 0.0, 40.0, &opts)
            .unwrap()
            .value;
        // ∫_0^∞ J0 = 1
        assert!((head + t - 1.0).abs() < 1e-3, "{}", head + t - 1.0);
    }
}
