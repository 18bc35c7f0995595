use rayon::prelude::*;

use super::{FitFamily, Param, ParamVector, Transform};
use crate::covmat::{assemble_dense, DenseCholesky, PointSet, SymmetricMatrix};
use crate::error::{Error, Result};

/// Relative finite-difference step on the unconstrained scale.
const FD_STEP: f64 = 1e-5;

/// ∂Σ/∂θ_p as a dense row-major matrix.
fn covariance_derivative(
    theta: &ParamVector,
    family: FitFamily,
    ps: &PointSet,
    p: Param,
    sigma: &[f64],
) -> Result<Vec<f64>> {
    let dim = ps.dim();
    let n = ps.len();
    match p {
        Param::Sigma2 => Ok(sigma.iter().map(|v| v / theta.sigma2).collect()),
        Param::Nugget => {
            // Σ is linear in τ²: ∂Σ/∂τ² = σ²(I − R)
            let unit = ParamVector { nugget: 0.0, ..*theta };
            let r = assemble_dense(ps, &unit.model(family, dim)?)?.to_dense();
            Ok((0..n * n)
                .map(|k| {
                    let id = if k % (n + 1) == 0 { theta.sigma2 } else { 0.0 };
                    id - r[k]
                })
                .collect())
        }
        Param::Beta | Param::MuStar => {
            let t = Transform {
                mu_star_max: if matches!(family, FitFamily::Phi { .. }) {
                    family.mu_star_max(dim)
                } else {
                    f64::NAN
                },
            };
            let v = theta.get(p);
            let u = t.to_unconstrained(p, v);
            let at = |x: f64| -> Result<Vec<f64>> {
                let mut th = *theta;
                th.set(p, x);
                Ok(assemble_dense(ps, &th.model(family, dim)?)?.to_dense())
            };
            if u.is_finite() {
                let h = FD_STEP * u.abs().max(1.0);
                let (lo, hi) = (t.from_unconstrained(p, u - h), t.from_unconstrained(p, u + h));
                let (a, b) = (at(lo)?, at(hi)?);
                // chain rule through the transform: divide by dθ/du
                Ok(a.iter().zip(&b).map(|(x, y)| (y - x) / (hi - lo)).collect())
            } else {
                // μ* on its upper bound: backward difference on the original scale
                let h = FD_STEP * v.abs().max(1e-3);
                let a = at(v - h)?;
                Ok(a.iter().zip(sigma).map(|(x, y)| (y - x) / h).collect())
            }
        }
    }
}

/// F_ij = ½ tr(Σ⁻¹ ∂_iΣ Σ⁻¹ ∂_jΣ) over the parameters in `free`.
pub fn fisher_information(
    theta: &ParamVector,
    family: FitFamily,
    ps: &PointSet,
    free: &[Param],
) -> Result<Vec<Vec<f64>>> {
    let n = ps.len();
    let sigma_m = assemble_dense(ps, &theta.model(family, ps.dim())?)?;
    let factor = DenseCholesky::new(&sigma_m)?;
    let sigma = sigma_m.to_dense();
    // columns of Σ⁻¹ ∂Σ; None stands for I/σ²
    let products: Vec<Option<Vec<Vec<f64>>>> = free
        .iter()
        .map(|&p| {
            if p == Param::Sigma2 {
                return Ok(None);
            }
            let d = covariance_derivative(theta, family, ps, p, &sigma)?;
            let cols: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|c| factor.solve(&d[c * n..(c + 1) * n]))
                .collect();
            Ok(Some(cols))
        })
        .collect::<Result<_>>()?;
    let trace_product = |a: &Option<Vec<Vec<f64>>>, b: &Option<Vec<Vec<f64>>>| -> f64 {
        let s2 = theta.sigma2;
        match (a, b) {
            (None, None) => n as f64 / (s2 * s2),
            (None, Some(m)) | (Some(m), None) => (0..n).map(|k| m[k][k]).sum::<f64>() / s2,
            (Some(x), Some(y)) => (0..n)
                .into_par_iter()
                .map(|c| (0..n).map(|k| x[c][k] * y[k][c]).sum::<f64>())
                .collect::<Vec<f64>>()
                .iter()
                .sum(),
        }
    };
    let p = free.len();
    let mut f = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let v = 0.5 * trace_product(&products[i], &products[j]);
            f[i][j] = v;
            f[j][i] = v;
        }
    }
    Ok(f)
}

/// Diagonal of F⁻¹.
pub fn fisher_inverse_diagonal(f: &[Vec<f64>]) -> Result<Vec<f64>> {
    let p = f.len();
    let flat: Vec<f64> = f.iter().flatten().copied().collect();
    if flat.len() != p * p {
        return Err(Error::DimensionMismatch {
            expected: p * p,
            found: flat.len(),
        });
    }
    Ok(DenseCholesky::new(&SymmetricMatrix::dense(p, flat)?)?.inverse_diagonal())
}
