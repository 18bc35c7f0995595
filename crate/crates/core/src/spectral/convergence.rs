//! Sup-norm gaps between φ_{ν,μ,β} and Matérn with smoothness ν + 1/2,
//! in the correlation and spectral domains.

use std::io::Write;

use rayon::prelude::*;

use super::{matern_spectral, phi_spectral, SpectralQuery};
use crate::error::{Error, Result};
use crate::kernels::{lambda, Family, MaternParams, PhiParams};

/// Dimension used for the correlation convergence table.
pub const TABLE_DIM: usize = 2;
const GRID_POINTS: usize = 4096;
const FAR_LAGS: f64 = 50.0;

/// Location and size of a supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupGap {
    pub value: f64,
    pub argmax: f64,
}

/// sup_{x ∈ [lo, hi]} |f(x)|: the best of `n` uniform grid points, refined by
/// golden-section search over the neighbouring grid cells.
pub fn sup_gap<F>(f: F, lo: f64, hi: f64, n: usize) -> Result<SupGap>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(hi > lo) || n < 3 {
        return Err(Error::InvalidParameter(format!(
            "sup_gap needs lo < hi and at least 3 points (got [{lo}, {hi}], n = {n})"
        )));
    }
    let h = (hi - lo) / (n - 1) as f64;
    let mut best = SupGap {
        value: -1.0,
        argmax: lo,
    };
    let mut best_i = 0;
    for i in 0..n {
        let x = lo + h * i as f64;
        let v = f(x)?.abs();
        if v > best.value {
            best = SupGap { value: v, argmax: x };
            best_i = i;
        }
    }
    let a = lo + h * best_i.saturating_sub(1) as f64;
    let b = (lo + h * (best_i + 1) as f64).min(hi);
    let refined = golden_max(&f, a, b)?;
    if refined.value > best.value {
        best = refined;
    }
    Ok(best)
}

fn golden_max<F>(f: &F, mut a: f64, mut b: f64) -> Result<SupGap>
where
    F: Fn(f64) -> Result<f64>,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?.abs();
    let mut fd = f(d)?.abs();
    for _ in 0..80 {
        if (b - a) <= 1e-12 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?.abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?.abs();
        }
    }
    Ok(if fc > fd {
        SupGap { value: fc, argmax: c }
    } else {
        SupGap { value: fd, argmax: d }
    })
}

/// One (ν, μ) cell of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCell {
    pub nu: f64,
    pub mu: f64,
    pub max_abs_error: f64,
    pub argmax_r: f64,
}

/// A column of the convergence table: either λ(2, ν), which depends on the
/// row, or a fixed μ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuColumn {
    Lambda,
    Value(f64),
}

impl MuColumn {
    pub fn resolve(&self, nu: f64) -> f64 {
        match *self {
            MuColumn::Lambda => lambda(TABLE_DIM, nu),
            MuColumn::Value(mu) => mu,
        }
    }
}

/// Cells in row-major order (ν outer, μ inner).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub beta: f64,
    pub nu_list: Vec<f64>,
    pub mu_columns: Vec<MuColumn>,
    pub cells: Vec<ConvergenceCell>,
}

impl ConvergenceReport {
    pub fn row(&self, i: usize) -> &[ConvergenceCell] {
        let w = self.mu_columns.len();
        &self.cells[i * w..(i + 1) * w]
    }

    pub fn cell(&self, nu: f64, mu: f64) -> Option<&ConvergenceCell> {
        self.cells.iter().find(|c| c.nu == nu && c.mu == mu)
    }

    /// CSV with columns nu, mu, max_abs_error, argmax_r.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["nu", "mu", "max_abs_error", "argmax_r"])?;
        for c in &self.cells {
            w.write_record([
                format!("{:.16e}", c.nu),
                format!("{:.16e}", c.mu),
                format!("{:.16e}", c.max_abs_error),
                format!("{:.16e}", c.argmax_r),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// max_r |φ_{ν,μ,β}(r) − M_{ν+1/2,β}(r)| in dimension 2.
///
/// Beyond the support the gap equals the decreasing Matérn tail, so the
/// search covers [0, min(δ, 50β)].
pub fn convergence_cell(nu: f64, mu: f64, beta: f64) -> Result<ConvergenceCell> {
    let phi = Family::Phi(PhiParams::new(nu, mu, beta, TABLE_DIM)?);
    let matern = Family::Matern(MaternParams::new(nu + 0.5, beta)?);
    let delta = phi.support()?.unwrap_or(f64::INFINITY);
    let pk = phi.kernel()?;
    let mk = matern.kernel()?;
    let hi = delta.min(FAR_LAGS * beta);
    let gap = sup_gap(|r| Ok(pk.eval(r)? - mk.eval(r)?), 0.0, hi, GRID_POINTS)?;
    Ok(ConvergenceCell {
        nu,
        mu,
        max_abs_error: gap.value,
        argmax_r: gap.argmax,
    })
}

/// Convergence table over ν × μ; cells are computed in parallel.
pub fn convergence_table(nu_list: &[f64], mu_columns: &[MuColumn], beta: f64) -> Result<ConvergenceReport> {
    let jobs: Vec<(f64, f64)> = nu_list
        .iter()
        .flat_map(|&nu| mu_columns.iter().map(move |m| (nu, m.resolve(nu))))
        .collect();
    for &(nu, mu) in &jobs {
        let lam = lambda(TABLE_DIM, nu);
        if mu < lam {
            return Err(Error::InvalidParameter(format!(
                "mu = {mu} is below lambda(2, {nu}) = {lam}"
            )));
        }
    }
    let cells = jobs
        .par_iter()
        .map(|&(nu, mu)| {
            let cell = convergence_cell(nu, mu, beta);
            log::debug!("convergence cell nu={nu} mu={mu}: {cell:?}");
            cell
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        beta,
        nu_list: nu_list.to_vec(),
        mu_columns: mu_columns.to_vec(),
        cells,
    })
}

/// Uniform grid of `n` frequencies on (0, 20/β].
pub fn default_z_grid(beta: f64, n: usize) -> Vec<f64> {
    let top = 20.0 / beta;
    (1..=n).map(|i| top * i as f64 / n as f64).collect()
}

/// For each μ, sup over `z_grid` of |φ̂_{ν,μ,β}(z) − M̂_{ν+1/2,β}(z)| in
/// dimension `dim`.
pub fn spectral_convergence(nu: f64, mu_list: &[f64], beta: f64, dim: usize, z_grid: &[f64]) -> Result<Vec<SupGap>> {
    if z_grid.iter().any(|&z| !(z > 0.0) || !z.is_finite()) {
        return Err(Error::InvalidParameter("z grid must be positive and finite".into()));
    }
    let matern = MaternParams::new(nu + 0.5, beta)?;
    mu_list
        .par_iter()
        .map(|&mu| {
            let p = PhiParams::new(nu, mu, beta, dim)?;
            let gaps = z_grid
                .iter()
                .map(|&z| {
                    let q = SpectralQuery::new(z, dim)?;
                    Ok((z, (phi_spectral(&q, &p)? - matern_spectral(&q, &matern)).abs()))
                })
                .collect::<Result<Vec<_>>>()?;
            let (argmax, value) = gaps
                .into_iter()
                .fold((f64::NAN, -1.0), |acc, (z, g)| if g > acc.1 { (z, g) } else { acc });
            Ok(SupGap { value, argmax })
        })
        .collect()
}
