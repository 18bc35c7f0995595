//! Isotropic correlation functions: Matérn, generalized Wendland in its
//! original parameterization, and the φ family, which is the generalized
//! Wendland kernel with its support tied to a Matérn-compatible scale β.

mod matern;
mod wendland;

pub use matern::matern;
pub use wendland::{gen_wendland, gw_askey, gw_closed_form, gw_hypergeometric, gw_integral, gw_series};

use matern::MaternKernel;
use wendland::WendlandKernel;

use crate::error::{Error, Result};
use crate::specfun::log_gamma;

/// Smallest admissible shape μ for positive definiteness in ℝ^d:
/// λ(d, ν) = (d + 1)/2 + ν.
pub fn lambda(dim: usize, nu: f64) -> f64 {
    (dim as f64 + 1.0) / 2.0 + nu
}

pub(crate) fn check_distance(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            "correlation",
            format!("distance r = {r} must be finite and nonnegative"),
        ))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dimension {dim} must be 1, 2 or 3")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {v} must be positive and finite"
        )))
    }
}

fn check_shape(nu: f64, mu: f64, dim: usize) -> Result<()> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("nu = {nu} must be nonnegative")));
    }
    check_dim(dim)?;
    let lam = lambda(dim, nu);
    if !(mu >= lam) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mu = {mu} is below lambda(d={dim}, nu={nu}) = {lam}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaternParams {
    pub nu: f64,
    pub beta: f64,
}

impl MaternParams {
    pub fn new(nu: f64, beta: f64) -> Result<Self> {
        check_positive("nu", nu)?;
        check_positive("beta", beta)?;
        Ok(MaternParams { nu, beta })
    }
}

/// Generalized Wendland parameters in the original parameterization, with
/// the compact support given directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenWendlandParams {
    pub nu: f64,
    pub mu: f64,
    pub support: f64,
    pub dim: usize,
}

impl GenWendlandParams {
    pub fn new(nu: f64, mu: f64, support: f64, dim: usize) -> Result<Self> {
        check_shape(nu, mu, dim)?;
        check_positive("support", support)?;
        Ok(GenWendlandParams { nu, mu, support, dim })
    }
}

/// φ family parameters: the support is derived from β through
/// [`delta_support`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiParams {
    pub nu: f64,
    pub mu: f64,
    pub beta: f64,
    pub dim: usize,
}

impl PhiParams {
    pub fn new(nu: f64, mu: f64, beta: f64, dim: usize) -> Result<Self> {
        check_shape(nu, mu, dim)?;
        check_positive("beta", beta)?;
        Ok(PhiParams { nu, mu, beta, dim })
    }

    pub fn support(&self) -> Result<f64> {
        delta_support(self.nu, self.mu, self.beta)
    }

    pub fn to_gen_wendland(&self) -> Result<GenWendlandParams> {
        Ok(GenWendlandParams {
            nu: self.nu,
            mu: self.mu,
            support: self.support()?,
            dim: self.dim,
        })
    }
}

/// Compact support δ = β (Γ(μ + 2ν + 1)/Γ(μ))^{1/(1+2ν)}.
pub fn delta_support(nu: f64, mu: f64, beta: f64) -> Result<f64> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("nu = {nu} must be nonnegative")));
    }
    check_positive("mu", mu)?;
    check_positive("beta", beta)?;
    let ln_ratio = log_gamma(mu + 2.0 * nu + 1.0)? - log_gamma(mu)?;
    Ok(beta * (ln_ratio / (1.0 + 2.0 * nu)).exp())
}

/// φ_{ν,μ,β}(r): the generalized Wendland kernel at support δ_{ν,μ,β}.
pub fn phi(r: f64, p: &PhiParams) -> Result<f64> {
    check_distance(r)?;
    WendlandKernel::new(&p.to_gen_wendland()?)?.eval(r)
}

/// Correlation family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Matern(MaternParams),
    GenWendland(GenWendlandParams),
    Phi(PhiParams),
}

impl Family {
    /// Compact support, or `None` for Matérn.
    pub fn support(&self) -> Result<Option<f64>> {
        Ok(match self {
            Family::Matern(_) => None,
            Family::GenWendland(p) => Some(p.support),
            Family::Phi(p) => Some(p.support()?),
        })
    }

    /// Natural length scale: β for Matérn and φ, the support for the
    /// original Wendland parameterization.
    pub fn scale(&self) -> f64 {
        match self {
            Family::Matern(p) => p.beta,
            Family::GenWendland(p) => p.support,
            Family::Phi(p) => p.beta,
        }
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Ok(match self {
            Family::Matern(p) => Kernel(KernelImpl::Matern(MaternKernel::new(p)?)),
            Family::GenWendland(p) => Kernel(KernelImpl::Wendland(WendlandKernel::new(p)?)),
            Family::Phi(p) => Kernel(KernelImpl::Wendland(WendlandKernel::new(&p.to_gen_wendland()?)?)),
        })
    }

    pub fn correlation(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        self.kernel()?.eval(r)
    }
}

/// A correlation function with its constants resolved, for repeated
/// evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Kernel(KernelImpl);

#[derive(Debug, Clone, Copy)]
enum KernelImpl {
    Matern(MaternKernel),
    Wendland(WendlandKernel),
}

impl Kernel {
    pub fn eval(&self, r: f64) -> Result<f64> {
        match &self.0 {
            KernelImpl::Matern(k) => k.eval(r),
            KernelImpl::Wendland(k) => k.eval(r),
        }
    }
}

/// Covariance model: a correlation family scaled by a variance σ² with a
/// nugget fraction τ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationModel {
    pub family: Family,
    pub nugget: f64,
    pub variance: f64,
}

impl CorrelationModel {
    pub fn new(family: Family, nugget: f64, variance: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&nugget) {
            return Err(Error::InvalidParameter(format!("nugget = {nugget} must lie in [0, 1)")));
        }
        check_positive("variance", variance)?;
        Ok(CorrelationModel {
            family,
            nugget,
            variance,
        })
    }

    pub fn support(&self) -> Result<Option<f64>> {
        self.family.support()
    }

    pub fn correlation(&self, r: f64) -> Result<f64> {
        self.family.correlation(r)
    }

    /// σ²[(1 − τ²)ρ(r) + τ² 1{r = 0}].
    pub fn covariance(&self, r: f64) -> Result<f64> {
        let rho = self.correlation(r)?;
        Ok(apply_nugget_variance(rho, r, self))
    }
}

/// σ²[(1 − τ²)ρ + τ² 1{r = 0}].
pub fn apply_nugget_variance(rho: f64, r: f64, model: &CorrelationModel) -> f64 {
    let point_mass = if r == 0.0 { model.nugget } else { 0.0 };
    model.variance * ((1.0 - model.nugget) * rho + point_mass)
}

/// Distance at which the correlation first drops to `threshold`, by
/// bisection to a relative bracket width of 1e-8.
pub fn practical_range(model: &CorrelationModel, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold = {threshold} must lie in (0, 1)"
        )));
    }
    let kernel = model.family.kernel()?;
    let scale = model.family.scale();
    let limit = 1e6 * scale;
    let mut lo = 0.0;
    let mut hi = match model.support()? {
        Some(s) => s,
        None => {
            let mut h = scale;
            while kernel.eval(h)? > threshold {
                lo = h;
                h *= 2.0;
                if h > limit {
                    return Err(Error::BracketNotFound(format!(
                        "correlation stays above {threshold} up to {limit}"
                    )));
                }
            }
            h
        }
    };
    while hi - lo > 1e-8 * hi {
        let mid = 0.5 * (lo + hi);
        if kernel.eval(mid)? > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_values() {
        assert_eq!(lambda(2, 0.0), 1.5);
        assert_eq!(lambda(1, 1.0), 2.0);
        assert_eq!(lambda(3, 0.5), 2.5);
    }

    #[test]
    fn support_examples() {
        assert!((delta_support(2.0, 5.0, 0.0338).unwrap() - 0.231).abs() < 1e-3);
        assert!((delta_support(2.0, 10.0, 0.0338).unwrap() - 0.403).abs() < 1e-3);
        assert!((delta_support(2.0, 25.0, 0.0338).unwrap() - 0.911).abs() < 1e-3);
        for mu in [1.5, 3.0, 7.25] {
            let d = delta_support(0.0, mu, 0.2).unwrap();
            assert!((d - 0.2 * mu).abs() < 1e-13);
        }
    }

    #[test]
    fn support_monotone_on_grid() {
        let nus = [0.0, 0.5, 1.0, 1.7, 3.0];
        let mus = [3.5, 4.0, 6.0, 10.0, 50.0];
        let betas = [0.01, 0.1, 0.5, 1.0, 7.0];
        let d = |i: usize, j: usize, k: usize| delta_support(nus[i], mus[j], betas[k]).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    if i + 1 < 5 {
                        assert!(d(i + 1, j, k) > d(i, j, k));
                    }
                    if j + 1 < 5 {
                        assert!(d(i, j + 1, k) > d(i, j, k));
                    }
                    if k + 1 < 5 {
                        assert!(d(i, j, k + 1) > d(i, j, k));
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(GenWendlandParams::new(1.0, 2.0, 1.0, 2).is_err());
        assert!(PhiParams::new(0.0, 1.5, 1.0, 2).is_ok());
        assert!(PhiParams::new(0.0, 1.49, 1.0, 2).is_err());
        assert!(PhiParams::new(0.0, 3.0, 1.0, 4).is_err());
        assert!(MaternParams::new(0.0, 1.0).is_err());
        let fam = Family::Matern(MaternParams::new(0.5, 1.0).unwrap());
        assert!(CorrelationModel::new(fam, 1.0, 1.0).is_err());
        assert!(CorrelationModel::new(fam, 0.1, 0.0).is_err());
        assert!(fam.correlation(-1.0).is_err());
    }

    #[test]
    fn phi_compact_support() {
        let p = PhiParams::new(1.0, 5.0, 0.1, 2).unwrap();
        let d = p.support().unwrap();
        assert_eq!(phi(d, &p).unwrap(), 0.0);
        assert_eq!(phi(d * (1.0 + 1e-12), &p).unwrap(), 0.0);
        assert!(phi(d * 0.999, &p).unwrap() > 0.0);
        assert_eq!(phi(0.0, &p).unwrap(), 1.0);
    }

    #[test]
    fn phi_near_matern_for_large_mu() {
        let p = PhiParams::new(0.0, 100.0, 0.167, 2).unwrap();
        let m = MaternParams::new(0.5, 0.167).unwrap();
        let gap = (phi(0.1, &p).unwrap() - matern(0.1, &m).unwrap()).abs();
        assert!(gap < 0.03, "{gap}");
    }

    #[test]
    fn nugget_arithmetic() {
        let fam = Family::Matern(MaternParams::new(0.5, 1.0).unwrap());
        let model = CorrelationModel::new(fam, 0.1, 1.0).unwrap();
        assert!((apply_nugget_variance(0.5, 0.3, &model) - 0.45).abs() < 1e-15);
        let model = CorrelationModel::new(fam, 0.1, 2.5).unwrap();
        assert_eq!(model.covariance(0.0).unwrap(), 2.5);
        let model = CorrelationModel::new(fam, 0.0, 2.0).unwrap();
        let r = 0.4;
        assert!((model.covariance(r).unwrap() - 2.0 * (-r).exp()).abs() < 1e-15);
    }

    #[test]
    fn practical_range_examples() {
        let beta = 0.3;
        let fam = Family::Matern(MaternParams::new(0.5, beta).unwrap());
        let model = CorrelationModel::new(fam, 0.0, 1.0).unwrap();
        let pr = practical_range(&model, 0.05).unwrap();
        assert!((pr / beta + 0.05f64.ln()).abs() < 1e-7);

        let fam = Family::Matern(MaternParams::new(2.5, 0.084).unwrap());
        let model = CorrelationModel::new(fam, 0.0, 1.0).unwrap();
        assert!((practical_range(&model, 0.05).unwrap() - 0.5).abs() < 0.01);

        let p = PhiParams::new(1.0, 4.0, 0.1, 2).unwrap();
        let model = CorrelationModel::new(Family::Phi(p), 0.0, 1.0).unwrap();
        assert!(practical_range(&model, 0.05).unwrap() <= p.support().unwrap());
    }

    #[test]
    fn gaussian_limit_of_matern() {
        // matern(r; ν, β/(2√ν)) → exp(−r²/β²) as ν grows
        let beta = 1.0;
        let mut prev = f64::INFINITY;
        for nu in [2.0, 8.0, 32.0, 128.0] {
            let p = MaternParams::new(nu, beta / (2.0 * f64::sqrt(nu))).unwrap();
            let mut sup: f64 = 0.0;
            for i in 0..=600 {
                let r = 3.0 * beta * i as f64 / 600.0;
                let g = (-(r * r) / (beta * beta)).exp();
                sup = sup.max((matern(r, &p).unwrap() - g).abs());
            }
            assert!(sup < prev, "nu={nu} sup={sup}");
            prev = sup;
        }
        assert!(prev < 0.01);
    }
}
