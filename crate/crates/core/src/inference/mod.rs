//! Gaussian likelihood for zero-mean fields, maximum-likelihood fitting
//! with σ² profiled out, Fisher-information standard errors and the
//! microergodic parameter.

mod fisher;

use std::sync::Mutex;

use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;

pub use fisher::{fisher_information, fisher_inverse_diagonal};

use crate::covmat::{assemble, factorize, PointSet};
use crate::error::{Error, Result};
use crate::kernels::{lambda, CorrelationModel, Family, MaternParams, PhiParams};
use crate::specfun::log_gamma;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Distance to a μ* bound below which the fit reports a boundary hit.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Correlation family being fitted, with its fixed smoothness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitFamily {
    /// Matérn with smoothness ν.
    Matern { nu: f64 },
    /// φ_{ν,μ,β}, with μ carried as μ* = 1/μ.
    Phi { nu: f64 },
}

impl FitFamily {
    pub fn nu(&self) -> f64 {
        match *self {
            FitFamily::Matern { nu } | FitFamily::Phi { nu } => nu,
        }
    }

    /// Upper end 1/λ(d, ν) of the μ* range.
    pub fn mu_star_max(&self, dim: usize) -> f64 {
        1.0 / lambda(dim, self.nu())
    }
}

/// Covariance parameters θ = (σ², β, μ*, τ²); μ* is `None` for Matérn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector {
    pub sigma2: f64,
    pub beta: f64,
    pub mu_star: Option<f64>,
    pub nugget: f64,
}

/// Which parameters are held at their initial values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FixedMask {
    pub sigma2: bool,
    pub beta: bool,
    pub mu: bool,
    pub nugget: bool,
}

/// A single covariance parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Sigma2,
    Beta,
    MuStar,
    Nugget,
}

impl Param {
    pub fn name(&self) -> &'static str {
        match self {
            Param::Sigma2 => "sigma2",
            Param::Beta => "beta",
            Param::MuStar => "mu_star",
            Param::Nugget => "nugget",
        }
    }
}

impl ParamVector {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Sigma2 => self.sigma2,
            Param::Beta => self.beta,
            Param::MuStar => self.mu_star.unwrap_or(f64::NAN),
            Param::Nugget => self.nugget,
        }
    }

    pub fn set(&mut self, p: Param, v: f64) {
        match p {
            Param::Sigma2 => self.sigma2 = v,
            Param::Beta => self.beta = v,
            Param::MuStar => self.mu_star = Some(v),
            Param::Nugget => self.nugget = v,
        }
    }

    /// μ = 1/μ*, snapped onto λ(d, ν) when μ* sits at its upper bound up
    /// to rounding.
    pub fn mu(&self, family: FitFamily, dim: usize) -> Option<f64> {
        let ms = self.mu_star?;
        let lam = lambda(dim, family.nu());
        let mu = 1.0 / ms;
        Some(if mu < lam && mu > lam * (1.0 - 1e-12) { lam } else { mu })
    }

    pub fn validate(&self, family: FitFamily, dim: usize) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma2 = {} must be positive",
                self.sigma2
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta = {} must be positive",
                self.beta
            )));
        }
        if !(0.0..1.0).contains(&self.nugget) {
            return Err(Error::InvalidParameter(format!(
                "nugget = {} must lie in [0, 1)",
                self.nugget
            )));
        }
        match (family, self.mu_star) {
            (FitFamily::Matern { .. }, None) => Ok(()),
            (FitFamily::Matern { .. }, Some(_)) => Err(Error::InvalidParameter("Matérn has no mu_star".into())),
            (FitFamily::Phi { .. }, None) => Err(Error::InvalidParameter("the phi family needs mu_star".into())),
            (FitFamily::Phi { .. }, Some(ms)) => {
                let hi = family.mu_star_max(dim);
                if ms > 0.0 && ms <= hi * (1.0 + 1e-12) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("mu_star = {ms} must lie in (0, {hi}]")))
                }
            }
        }
    }

    /// The covariance model these parameters describe in dimension `dim`.
    pub fn model(&self, family: FitFamily, dim: usize) -> Result<CorrelationModel> {
        self.validate(family, dim)?;
        let fam = match family {
            FitFamily::Matern { nu } => Family::Matern(MaternParams::new(nu, self.beta)?),
            FitFamily::Phi { nu } => Family::Phi(PhiParams::new(nu, self.mu(family, dim).unwrap(), self.beta, dim)?),
        };
        CorrelationModel::new(fam, self.nugget, self.sigma2)
    }
}

fn check_observations(ps: &PointSet, z: &[f64]) -> Result<()> {
    if z.len() != ps.len() {
        return Err(Error::DimensionMismatch {
            expected: ps.len(),
            found: z.len(),
        });
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("observations must be finite".into()));
    }
    Ok(())
}

/// log|Σ| and zᵀΣ⁻¹z from one Cholesky factorization.
fn logdet_and_quadratic(theta: &ParamVector, family: FitFamily, ps: &PointSet, z: &[f64]) -> Result<(f64, f64)> {
    let model = theta.model(family, ps.dim())?;
    let factor = factorize(&assemble(ps, &model)?)?;
    let x = factor.solve(z)?;
    let q = x.iter().zip(z).map(|(a, b)| a * b).sum();
    Ok((factor.logdet(), q))
}

/// −½[n log 2π + log|Σ| + zᵀΣ⁻¹z] for Σ = σ²[(1 − τ²)R + τ²I].
pub fn log_likelihood(theta: &ParamVector, family: FitFamily, ps: &PointSet, z: &[f64]) -> Result<f64> {
    check_observations(ps, z)?;
    let (logdet, q) = logdet_and_quadratic(theta, family, ps, z)?;
    Ok(-0.5 * (z.len() as f64 * LN_2PI + logdet + q))
}

/// The σ² maximizing the likelihood for the other parameters of `theta`,
/// zᵀR̃⁻¹z/n with R̃ = (1 − τ²)R + τ²I, and the maximized log-likelihood.
pub fn profile_sigma2(theta: &ParamVector, family: FitFamily, ps: &PointSet, z: &[f64]) -> Result<(f64, f64)> {
    check_observations(ps, z)?;
    let unit = ParamVector { sigma2: 1.0, ..*theta };
    let (logdet, q) = logdet_and_quadratic(&unit, family, ps, z)?;
    let n = z.len() as f64;
    let s2 = q / n;
    Ok((s2, -0.5 * (n * (LN_2PI + s2.ln()) + logdet + n)))
}

/// c(θ) = σ² β^{−(1+2ν)} Γ(μ+1)/Γ(2ν+μ+1) for the φ family; σ² β^{−2ν}
/// for Matérn with smoothness ν.
pub fn microergodic(theta: &ParamVector, family: FitFamily, dim: usize) -> Result<f64> {
    theta.validate(family, dim)?;
    let nu = family.nu();
    Ok(match family {
        FitFamily::Matern { .. } => theta.sigma2 * theta.beta.powf(-2.0 * nu),
        FitFamily::Phi { .. } => {
            let mu = theta.mu(family, dim).unwrap();
            let ln_g = log_gamma(mu + 1.0)? - log_gamma(2.0 * nu + mu + 1.0)?;
            (theta.sigma2.ln() - (1.0 + 2.0 * nu) * theta.beta.ln() + ln_g).exp()
        }
    })
}

/// Outcome of the fixed-domain equivalence test for two φ parameter sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equivalence {
    /// Both μ exceed ν + d + 1/2, so the criterion applies.
    pub precondition_met: bool,
    pub equivalent: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Two φ models with common ν are equivalent on the paths iff their
/// microergodic parameters coincide, provided μ_i > ν + d + 1/2.
pub fn equivalence_check(theta0: &ParamVector, theta1: &ParamVector, nu: f64, dim: usize) -> Result<Equivalence> {
    let family = FitFamily::Phi { nu };
    let lhs = microergodic(theta0, family, dim)?;
    let rhs = microergodic(theta1, family, dim)?;
    let bound = nu + dim as f64 + 0.5;
    let precondition_met = [theta0, theta1].iter().all(|t| t.mu(family, dim).unwrap() > bound);
    let equivalent = precondition_met && (lhs - rhs).abs() / lhs.max(rhs) < 1e-12;
    Ok(Equivalence {
        precondition_met,
        equivalent,
        lhs,
        rhs,
    })
}

/// A fitted μ* within [`BOUNDARY_TOL`] of one end of its range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// μ* → 0, the Matérn limit.
    MuStarLower,
    /// μ* → 1/λ(d, ν), the positive-definiteness limit.
    MuStarUpper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub family: FitFamily,
    pub theta: ParamVector,
    /// Free parameters, in the order used by `std_errors` and `fisher`.
    pub free: Vec<Param>,
    pub std_errors: Vec<f64>,
    pub fisher: Vec<Vec<f64>>,
    pub loglik: f64,
    pub aic: f64,
    pub microergodic: f64,
    pub iterations: usize,
    pub boundary: Vec<Boundary>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Zero evaluates the likelihood at the initial values without
    /// optimizing or profiling.
    pub max_iterations: u64,
    /// Converged once the simplex log-likelihood values span less than this.
    pub spread_tol: f64,
    pub fisher: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 5000,
            spread_tol: 1e-8,
            fisher: true,
        }
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Maps between θ and the unconstrained coordinates used by the optimizer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Transform {
    pub mu_star_max: f64,
}

impl Transform {
    pub(crate) fn to_unconstrained(&self, p: Param, v: f64) -> f64 {
        match p {
            Param::Sigma2 | Param::Beta => v.ln(),
            Param::MuStar => logit(v / self.mu_star_max),
            Param::Nugget => logit(v),
        }
    }

    pub(crate) fn from_unconstrained(&self, p: Param, u: f64) -> f64 {
        match p {
            Param::Sigma2 | Param::Beta => u.exp(),
            Param::MuStar => self.mu_star_max * sigmoid(u),
            Param::Nugget => sigmoid(u),
        }
    }
}

struct Objective<'a> {
    ps: &'a PointSet,
    z: &'a [f64],
    family: FitFamily,
    base: ParamVector,
    params: Vec<Param>,
    transform: Transform,
    profile: bool,
    failure: Mutex<Option<Error>>,
}

impl Objective<'_> {
    fn theta(&self, u: &[f64]) -> ParamVector {
        let mut t = self.base;
        for (&p, &v) in self.params.iter().zip(u) {
            t.set(p, self.transform.from_unconstrained(p, v));
        }
        t
    }

    /// Negative log-likelihood; invalid or non-PD points map to +∞.
    fn negloglik(&self, u: &[f64]) -> Result<f64> {
        let t = self.theta(u);
        let res = if self.profile {
            profile_sigma2(&t, self.family, self.ps, self.z).map(|r| r.1)
        } else {
            log_likelihood(&t, self.family, self.ps, self.z)
        };
        match res {
            Ok(l) if l.is_finite() => Ok(-l),
            Ok(_) | Err(Error::NotPositiveDefinite { .. }) | Err(Error::InvalidParameter(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }
}

struct CostRef<'a, 'b>(&'a Objective<'b>);

impl CostFunction for CostRef<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, u: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        self.0.negloglik(u).map_err(|e| {
            let msg = e.to_string();
            self.0.failure.lock().unwrap().get_or_insert(e);
            argmin::core::Error::msg(msg)
        })
    }
}

/// Starting values: σ² from the sample variance, β so that the practical
/// range is a fifth of the domain diameter, μ* mid-range, τ² = 0.05.
pub fn default_init(ps: &PointSet, z: &[f64], family: FitFamily) -> Result<ParamVector> {
    check_observations(ps, z)?;
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = if z.len() > 1 {
        z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        z[0] * z[0]
    };
    let mut theta = ParamVector {
        sigma2: if var > 0.0 { var } else { 1.0 },
        beta: 1.0,
        mu_star: match family {
            FitFamily::Matern { .. } => None,
            FitFamily::Phi { .. } => Some(0.5 * family.mu_star_max(ps.dim())),
        },
        nugget: 0.05,
    };
    let range_at_unit_beta = crate::kernels::practical_range(&theta.model(family, ps.dim())?, 0.05)?;
    let diameter = ps.diameter();
    if diameter > 0.0 {
        theta.beta = 0.2 * diameter / range_at_unit_beta;
    }
    Ok(theta)
}

/// Maximum-likelihood fit with the default options.
pub fn fit_ml(ps: &PointSet, z: &[f64], family: FitFamily, fixed: &FixedMask, init: &ParamVector) -> Result<FitResult> {
    fit_ml_with(ps, z, family, fixed, init, &FitOptions::default())
}

/// Maximum-likelihood fit. Parameters flagged in `fixed` keep their
/// values from `init`; a free σ² is profiled out, and the remaining free
/// parameters are optimized by Nelder–Mead in unconstrained coordinates.
pub fn fit_ml_with(
    ps: &PointSet,
    z: &[f64],
    family: FitFamily,
    fixed: &FixedMask,
    init: &ParamVector,
    opts: &FitOptions,
) -> Result<FitResult> {
    check_observations(ps, z)?;
    init.validate(family, ps.dim())?;
    let is_phi = matches!(family, FitFamily::Phi { .. });
    let mut free = Vec::new();
    if !fixed.sigma2 {
        free.push(Param::Sigma2);
    }
    if !fixed.beta {
        free.push(Param::Beta);
    }
    if is_phi && !fixed.mu {
        free.push(Param::MuStar);
    }
    if !fixed.nugget {
        free.push(Param::Nugget);
    }
    let profile = !fixed.sigma2;
    let transform = Transform {
        mu_star_max: if is_phi { family.mu_star_max(ps.dim()) } else { f64::NAN },
    };
    let mut base = *init;
    if !fixed.nugget && base.nugget <= 0.0 {
        base.nugget = 1e-3;
    }
    if !fixed.mu && is_phi && base.mu_star.unwrap() >= transform.mu_star_max * (1.0 - 1e-9) {
        base.mu_star = Some(transform.mu_star_max * (1.0 - 1e-3));
    }
    let params: Vec<Param> = free.iter().copied().filter(|&p| p != Param::Sigma2).collect();
    let objective = Objective {
        ps,
        z,
        family,
        base,
        params: params.clone(),
        transform,
        profile,
        failure: Mutex::new(None),
    };
    let u0: Vec<f64> = params
        .iter()
        .map(|&p| transform.to_unconstrained(p, base.get(p)))
        .collect();

    let mut iterations = 0;
    let u_best = if params.is_empty() || opts.max_iterations == 0 {
        u0
    } else {
        if objective.negloglik(&u0)?.is_infinite() {
            return Err(Error::InvalidParameter(
                "initial parameters give a non-positive-definite covariance".into(),
            ));
        }
        let mut u = u0;
        for step in [0.5, 0.1] {
            let (next, iters) = nelder_mead(&objective, &u, step, opts)?;
            iterations += iters;
            u = next;
        }
        u
    };

    let mut theta = objective.theta(&u_best);
    let loglik = if opts.max_iterations == 0 {
        theta = *init;
        log_likelihood(&theta, family, ps, z)?
    } else if profile {
        let (s2, l) = profile_sigma2(&theta, family, ps, z)?;
        theta.sigma2 = s2;
        l
    } else {
        log_likelihood(&theta, family, ps, z)?
    };

    let mut boundary = Vec::new();
    if let (true, Some(ms)) = (is_phi && !fixed.mu, theta.mu_star) {
        if ms < BOUNDARY_TOL {
            boundary.push(Boundary::MuStarLower);
        }
        if transform.mu_star_max - ms < BOUNDARY_TOL {
            boundary.push(Boundary::MuStarUpper);
        }
        for b in &boundary {
            log::warn!("mu_star = {ms} converged to the {b:?} boundary");
        }
    }

    let (fisher, std_errors) = if opts.fisher && !free.is_empty() {
        let f = fisher_information(&theta, family, ps, &free)?;
        let se = fisher_inverse_diagonal(&f)
            .map(|d| {
                d.into_iter()
                    .map(|v| if v > 0.0 { v.sqrt() } else { f64::NAN })
                    .collect()
            })
            .unwrap_or_else(|e| {
                log::warn!("Fisher information is singular: {e}");
                vec![f64::NAN; free.len()]
            });
        (f, se)
    } else {
        (Vec::new(), vec![f64::NAN; free.len()])
    };

    Ok(FitResult {
        family,
        theta,
        aic: 2.0 * free.len() as f64 - 2.0 * loglik,
        microergodic: microergodic(&theta, family, ps.dim())?,
        free,
        std_errors,
        fisher,
        loglik,
        iterations,
        boundary,
    })
}

fn nelder_mead(objective: &Objective, u0: &[f64], step: f64, opts: &FitOptions) -> Result<(Vec<f64>, usize)> {
    let m = u0.len() + 1;
    let mut simplex = vec![u0.to_vec()];
    for k in 0..u0.len() {
        let mut v = u0.to_vec();
        v[k] += step;
        simplex.push(v);
    }
    // a sample standard deviation s bounds the spread by 2 s √m
    let sd_tol = opts.spread_tol / (2.0 * (m as f64).sqrt());
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(sd_tol)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let res = Executor::new(CostRef(objective), solver)
        .configure(|s| s.max_iters(opts.max_iterations))
        .run()
        .map_err(|e| {
            objective
                .failure
                .lock()
                .unwrap()
                .take()
                .unwrap_or_else(|| Error::InvalidParameter(format!("optimizer failed: {e}")))
        })?;
    let state = res.state();
    let iters = state.get_iter() as usize;
    match state.get_termination_status() {
        TerminationStatus::Terminated(TerminationReason::SolverConverged) => {}
        TerminationStatus::Terminated(TerminationReason::MaxItersReached) => {
            return Err(Error::OptimizerNonConvergence { iterations: iters })
        }
        other => log::debug!("Nelder-Mead stopped: {other:?}"),
    }
    let best = state
        .get_best_param()
        .cloned()
        .ok_or(Error::OptimizerNonConvergence { iterations: iters })?;
    Ok((best, iters))
}
