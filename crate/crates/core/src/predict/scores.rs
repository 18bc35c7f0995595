use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Averaged proper scores of Gaussian predictive distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionScores {
    pub rmse: f64,
    /// Mean negative log predictive density, in nats.
    pub logscore: f64,
    pub crps: f64,
    pub count: usize,
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// CRPS of N(mean, sd²) at the outcome y:
/// sd[z(2Φ(z) − 1) + 2φ(z) − 1/√π] with z = (y − mean)/sd.
pub fn crps_gaussian(mean: f64, sd: f64, y: f64) -> f64 {
    let z = (y - mean) / sd;
    sd * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - 1.0 / PI.sqrt())
}

/// −log of the N(mean, sd²) density at y.
pub fn logscore_gaussian(mean: f64, sd: f64, y: f64) -> f64 {
    let z = (y - mean) / sd;
    0.5 * (2.0 * PI * sd * sd).ln() + 0.5 * z * z
}

/// RMSE, log score and CRPS averaged over predictions with means `mean`,
/// standard deviations `sd` and outcomes `truth`.
pub fn score_gaussian(mean: &[f64], sd: &[f64], truth: &[f64]) -> Result<PredictionScores> {
    let k = truth.len();
    if mean.len() != k || sd.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: if mean.len() != k { mean.len() } else { sd.len() },
        });
    }
    if k == 0 {
        return Err(Error::UndefinedScore("no predictions to score".into()));
    }
    if let Some(i) = sd.iter().position(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::UndefinedScore(format!(
            "prediction {i} has standard deviation {}",
            sd[i]
        )));
    }
    let mut se = 0.0;
    let mut ls = 0.0;
    let mut cr = 0.0;
    for i in 0..k {
        let e = truth[i] - mean[i];
        se += e * e;
        ls += logscore_gaussian(mean[i], sd[i], truth[i]);
        cr += crps_gaussian(mean[i], sd[i], truth[i]);
    }
    let kf = k as f64;
    Ok(PredictionScores {
        rmse: (se / kf).sqrt(),
        logscore: ls / kf,
        crps: cr / kf,
        count: k,
    })
}
