//! Gaussian random-field simulation and the replication study for the
//! sampling distribution of maximum-likelihood estimates.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::covmat::{assemble, factorize, PointSet};
use crate::error::{Error, Result};
use crate::inference::{
    fisher_information, fisher_inverse_diagonal, fit_ml_with, FitFamily, FitOptions, FixedMask, Param, ParamVector,
};
use crate::kernels::{delta_support, CorrelationModel};
use crate::specfun::log_gamma;

/// Generator for a seed and stream; streams give independent replicates.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One realization z = L ε of the zero-mean field with covariance `model`.
pub fn simulate_grf(ps: &PointSet, model: &CorrelationModel, seed: u64) -> Result<Vec<f64>> {
    simulate_grf_with(ps, model, &mut replicate_rng(seed, 0))
}

pub fn simulate_grf_with<R: Rng>(ps: &PointSet, model: &CorrelationModel, rng: &mut R) -> Result<Vec<f64>> {
    let factor = factorize(&assemble(ps, model)?)?;
    let eps: Vec<f64> = (0..ps.len()).map(|_| rng.sample(StandardNormal)).collect();
    factor.correlate(&eps)
}

/// β giving compact support δ: δ (Γ(μ)/Γ(μ+2ν+1))^{1/(1+2ν)}.
pub fn beta_for_support(nu: f64, mu: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "target support {delta} must be positive"
        )));
    }
    // validates ν and μ
    delta_support(nu, mu, 1.0)?;
    let ln_ratio = log_gamma(mu)? - log_gamma(mu + 2.0 * nu + 1.0)?;
    Ok(delta * (ln_ratio / (1.0 + 2.0 * nu)).exp())
}

/// How the range parameter of the study is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// β such that the compact support equals this value.
    Support(f64),
    Beta(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    /// Axis-aligned box, one (low, high) pair per dimension.
    pub domain: Vec<(f64, f64)>,
    pub replicates: usize,
    pub seed: u64,
    pub regime: Regime,
    pub sigma2: f64,
    /// Compute Fisher standard errors and standardized estimates.
    pub standardize: bool,
    pub fit: FitOptions,
}

impl SimConfig {
    /// Unit square, σ² = 1, standardized estimates on.
    pub fn unit_square(n: usize, replicates: usize, seed: u64, regime: Regime) -> Self {
        SimConfig {
            n,
            domain: vec![(0.0, 1.0); 2],
            replicates,
            seed,
            regime,
            sigma2: 1.0,
            standardize: true,
            fit: FitOptions {
                fisher: false,
                ..FitOptions::default()
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n = {} must be at least 2", self.n)));
        }
        if self.replicates < 1 {
            return Err(Error::InvalidParameter("at least one replicate is required".into()));
        }
        if !(1..=3).contains(&self.domain.len())
            || self
                .domain
                .iter()
                .any(|&(a, b)| !(b > a) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::InvalidParameter(
                "domain must be a nonempty box in 1 to 3 dimensions".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }
}

/// Result of one successful replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub estimate: ParamVector,
    /// (θ̂_i − θ_i)/√f_ii per free parameter, f_ii from the inverse Fisher
    /// information at the true θ; empty when standardization is off.
    pub standardized: Vec<f64>,
    /// √(n/2)(ĉ/c − 1).
    pub microergodic_stat: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub message: String,
}

/// Five-number summary with the count of points beyond 1.5 IQR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub outliers: usize,
}

impl Summary {
    /// Quartiles by linear interpolation between order statistics.
    pub fn of(values: &[f64]) -> Option<Summary> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(v.len() - 1);
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        let (q1, q3) = (q(0.25), q(0.75));
        let fence = 1.5 * (q3 - q1);
        Some(Summary {
            min: v[0],
            q1,
            median: q(0.5),
            q3,
            max: v[v.len() - 1],
            outliers: v.iter().filter(|&&x| x < q1 - fence || x > q3 + fence).count(),
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Interquartile range of the standard normal distribution.
pub const NORMAL_IQR: f64 = 1.348_979_500_392_163_5;

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub truth: ParamVector,
    pub family: FitFamily,
    pub n: usize,
    pub free: Vec<Param>,
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<ReplicateFailure>,
}

impl McReport {
    pub fn microergodic_stats(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.microergodic_stat).collect()
    }

    pub fn standardized(&self, p: Param) -> Vec<f64> {
        match self.free.iter().position(|&q| q == p) {
            Some(k) => self
                .records
                .iter()
                .filter_map(|r| r.standardized.get(k).copied())
                .collect(),
            None => Vec::new(),
        }
    }

    /// Summaries of each standardized estimate, then of the microergodic
    /// statistic under the name "microergodic".
    pub fn summaries(&self) -> Vec<(String, Summary)> {
        let mut out: Vec<(String, Summary)> = self
            .free
            .iter()
            .filter_map(|&p| Summary::of(&self.standardized(p)).map(|s| (p.name().to_string(), s)))
            .collect();
        if let Some(s) = Summary::of(&self.microergodic_stats()) {
            out.push(("microergodic".into(), s));
        }
        out
    }

    /// Sample variance of √n(ĉ/c − 1), which tends to 2.
    pub fn microergodic_variance(&self) -> f64 {
        let v: Vec<f64> = self.records.iter().map(|r| r.microergodic_stat * 2f64.sqrt()).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
    }

    /// CSV with columns replicate, parameter, standardized, microergodic_stat, status.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["replicate", "parameter", "standardized", "microergodic_stat", "status"])?;
        for r in &self.records {
            let m = format!("{:.16e}", r.microergodic_stat);
            if r.standardized.is_empty() {
                w.write_record([
                    r.replicate.to_string(),
                    String::new(),
                    String::new(),
                    m.clone(),
                    "ok".into(),
                ])?;
            }
            for (p, s) in self.free.iter().zip(&r.standardized) {
                w.write_record([
                    r.replicate.to_string(),
                    p.name().into(),
                    format!("{s:.16e}"),
                    m.clone(),
                    "ok".into(),
                ])?;
            }
        }
        for f in &self.failures {
            w.write_record([
                f.replicate.to_string(),
                String::new(),
                String::new(),
                String::new(),
                format!("failed: {}", f.message),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn uniform_points<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Result<PointSet> {
    let mut coords = Vec::with_capacity(cfg.n * cfg.dim());
    for _ in 0..cfg.n {
        for &(a, b) in &cfg.domain {
            coords.push(rng.gen_range(a..b));
        }
    }
    PointSet::from_flat(cfg.dim(), coords)
}

/// Replication study for the φ family with smoothness ν and shape μ:
/// each replicate draws fresh uniform locations, simulates a field, fits
/// the parameters not flagged in `fixed` starting from the truth perturbed
/// by up to 10%, and records standardized estimates and the microergodic
/// statistic. Fails if more than 10% of replicates fail.
pub fn run_study(cfg: &SimConfig, nu: f64, mu: f64, fixed: &FixedMask) -> Result<McReport> {
    cfg.validate()?;
    let family = FitFamily::Phi { nu };
    let beta = match cfg.regime {
        Regime::Support(delta) => beta_for_support(nu, mu, delta)?,
        Regime::Beta(b) => b,
    };
    let truth = ParamVector {
        sigma2: cfg.sigma2,
        beta,
        mu_star: Some(1.0 / mu),
        nugget: 0.0,
    };
    let fixed = FixedMask { nugget: true, ..*fixed };
    truth.validate(family, cfg.dim())?;
    let c_true = crate::inference::microergodic(&truth, family, cfg.dim())?;
    let mu_star_max = family.mu_star_max(cfg.dim());

    let outcomes: Vec<(usize, Result<(ReplicateRecord, Vec<Param>)>)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| {
            let run = || -> Result<(ReplicateRecord, Vec<Param>)> {
                let mut rng = replicate_rng(cfg.seed, rep as u64);
                let ps = uniform_points(cfg, &mut rng)?;
                let z = simulate_grf_with(&ps, &truth.model(family, cfg.dim())?, &mut rng)?;
                let mut init = truth;
                if cfg.fit.max_iterations > 0 {
                    let mut jitter = |v: f64| v * rng.gen_range(0.9..1.1);
                    if !fixed.sigma2 {
                        init.sigma2 = jitter(init.sigma2);
                    }
                    if !fixed.beta {
                        init.beta = jitter(init.beta);
                    }
                    if !fixed.mu {
                        init.mu_star = Some(jitter(init.mu_star.unwrap()).min(mu_star_max * (1.0 - 1e-3)));
                    }
                }
                let fit = fit_ml_with(&ps, &z, family, &fixed, &init, &cfg.fit)?;
                let standardized = if cfg.standardize {
                    let f = fisher_information(&truth, family, &ps, &fit.free)?;
                    let inv = fisher_inverse_diagonal(&f)?;
                    fit.free
                        .iter()
                        .zip(&inv)
                        .map(|(&p, &v)| (fit.theta.get(p) - truth.get(p)) / v.sqrt())
                        .collect()
                } else {
                    Vec::new()
                };
                let stat = (cfg.n as f64 / 2.0).sqrt() * (fit.microergodic / c_true - 1.0);
                Ok((
                    ReplicateRecord {
                        replicate: rep,
                        estimate: fit.theta,
                        standardized,
                        microergodic_stat: stat,
                        iterations: fit.iterations,
                    },
                    fit.free,
                ))
            };
            (rep, run())
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut free = Vec::new();
    for (rep, outcome) in outcomes {
        match outcome {
            Ok((r, f)) => {
                free = f;
                records.push(r);
            }
            Err(e) => {
                log::warn!("replicate {rep} failed: {e}");
                failures.push(ReplicateFailure {
                    replicate: rep,
                    message: e.to_string(),
                });
            }
        }
    }
    if failures.len() * 10 > cfg.replicates {
        return Err(Error::StudyFailure {
            failed: failures.len(),
            total: cfg.replicates,
        });
    }
    Ok(McReport {
        truth,
        family,
        n: cfg.n,
        free,
        records,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Family, PhiParams};

    #[test]
    fn beta_for_support_values() {
        assert!((beta_for_support(0.0, 3.5, 0.15).unwrap() - 0.15 / 3.5).abs() < 1e-15);
        assert!((beta_for_support(2.0, 5.0, 0.231).unwrap() - 0.0338).abs() < 1e-4);
        for (nu, mu, d) in [(0.0, 2.5, 0.6), (1.0, 5.5, 0.15), (2.5, 40.0, 0.3)] {
            let b = beta_for_support(nu, mu, d).unwrap();
            assert!((delta_support(nu, mu, b).unwrap() - d).abs() < 1e-12);
        }
        assert!(beta_for_support(0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn white_noise_variance_and_determinism() {
        let n = 10_000;
        let ps = PointSet::from_flat(1, (0..n).map(|k| k as f64).collect()).unwrap();
        let model = CorrelationModel::new(Family::Phi(PhiParams::new(0.0, 1.0, 0.1, 1).unwrap()), 0.0, 2.5).unwrap();
        let z = simulate_grf(&ps, &model, 42).unwrap();
        let var = z.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((var / 2.5 - 1.0).abs() < 0.05, "{var}");
        assert_eq!(z, simulate_grf(&ps, &model, 42).unwrap());
        assert_ne!(z, simulate_grf(&ps, &model, 43).unwrap());
    }

    #[test]
    fn summary_quartiles() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0, 5.0, 100.0]).unwrap();
        assert_eq!(s.median, 3.5);
        assert_eq!(s.q1, 2.25);
        assert_eq!(s.q3, 4.75);
        assert_eq!(s.outliers, 1);
        assert!(Summary::of(&[]).is_none());
    }

    fn small_config(replicates: usize) -> SimConfig {
        SimConfig::unit_square(60, replicates, 99, Regime::Support(0.3))
    }

    #[test]
    fn study_is_reproducible() {
        let fixed = FixedMask {
            mu: true,
            ..FixedMask::default()
        };
        let a = run_study(&small_config(4), 0.0, 3.5, &fixed).unwrap();
        let b = run_study(&small_config(4), 0.0, 3.5, &fixed).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len() + a.failures.len(), 4);
        assert_eq!(a.free, vec![Param::Sigma2, Param::Beta]);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("replicate,parameter,standardized,microergodic_stat,status\n"));
        assert_eq!(text.lines().count(), 1 + 2 * a.records.len() + a.failures.len());
    }

    #[test]
    fn zero_iterations_give_zero_standardized_estimates() {
        let mut cfg = small_config(2);
        cfg.fit.max_iterations = 0;
        let fixed = FixedMask::default();
        let r = run_study(&cfg, 1.0, 5.5, &fixed).unwrap();
        for rec in &r.records {
            assert!(rec.standardized.iter().all(|&v| v == 0.0), "{:?}", rec.standardized);
            assert_eq!(rec.microergodic_stat, 0.0);
        }
    }

    #[test]
    fn single_replicate() {
        let fixed = FixedMask {
            mu: true,
            beta: true,
            ..FixedMask::default()
        };
        let r = run_study(&small_config(1), 0.0, 2.5, &fixed).unwrap();
        assert_eq!(r.records.len(), 1);
    }
}
