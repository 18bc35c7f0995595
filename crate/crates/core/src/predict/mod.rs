//! Simple kriging, hold-out and leave-one-out scoring.
//!
//! The nugget is treated as measurement noise: cross-covariances use
//! σ²(1 − τ²)ρ(r), and a prediction targets a new noisy observation, so
//! its variance includes τ²σ².

mod scores;

use rand::seq::SliceRandom;
use rayon::prelude::*;

pub use scores::{crps_gaussian, logscore_gaussian, normal_cdf, normal_pdf, score_gaussian, PredictionScores};

use crate::covmat::{assemble, cross_covariance, factorize, PointSet};
use crate::error::{Error, Result};
use crate::kernels::CorrelationModel;
use crate::montecarlo::replicate_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct KrigingResult {
    pub predictions: Vec<f64>,
    pub sd: Vec<f64>,
}

impl KrigingResult {
    /// (truth − prediction)/sd.
    pub fn standardized_residuals(&self, truth: &[f64]) -> Result<Vec<f64>> {
        if truth.len() != self.predictions.len() {
            return Err(Error::DimensionMismatch {
                expected: self.predictions.len(),
                found: truth.len(),
            });
        }
        Ok(truth
            .iter()
            .zip(&self.predictions)
            .zip(&self.sd)
            .map(|((t, p), s)| (t - p) / s)
            .collect())
    }
}

/// Zero-mean kriging predictor cᵀΣ⁻¹z with variance σ² − cᵀΣ⁻¹c, from one
/// factorization of the training covariance. A target that coincides with
/// a training site returns that observation with variance τ²σ².
pub fn krige(train: &PointSet, z: &[f64], model: &CorrelationModel, targets: &PointSet) -> Result<KrigingResult> {
    if z.len() != train.len() {
        return Err(Error::DimensionMismatch {
            expected: train.len(),
            found: z.len(),
        });
    }
    if targets.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            found: targets.dim(),
        });
    }
    let factor = factorize(&assemble(train, model)?)?;
    let weights = factor.solve(z)?;
    let out: Vec<(f64, f64)> = (0..targets.len())
        .into_par_iter()
        .map(|t| {
            let s0 = targets.point(t);
            if let Some(i) = (0..train.len()).find(|&i| train.point(i) == s0) {
                return Ok((z[i], (model.nugget * model.variance).sqrt()));
            }
            let c = cross_covariance(train, s0, model)?;
            let pred = c.iter().zip(&weights).map(|(a, b)| a * b).sum();
            if c.iter().all(|&v| v == 0.0) {
                return Ok((pred, model.variance.sqrt()));
            }
            let x = factor.solve(&c)?;
            let reduction: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
            let var = (model.variance - reduction).clamp(0.0, model.variance);
            Ok((pred, var.sqrt()))
        })
        .collect::<Result<_>>()?;
    let (predictions, sd) = out.into_iter().unzip();
    Ok(KrigingResult { predictions, sd })
}

/// Scores a kriging result against the held-out truth.
pub fn score_holdout(result: &KrigingResult, truth: &[f64]) -> Result<PredictionScores> {
    score_gaussian(&result.predictions, &result.sd, truth)
}

/// Leave-one-out predictions from one factorization: the residual of
/// observation i is (Σ⁻¹z)_i/(Σ⁻¹)_ii and its variance 1/(Σ⁻¹)_ii.
pub fn loo_predictions(ps: &PointSet, z: &[f64], model: &CorrelationModel) -> Result<KrigingResult> {
    if z.len() != ps.len() {
        return Err(Error::DimensionMismatch {
            expected: ps.len(),
            found: z.len(),
        });
    }
    let factor = factorize(&assemble(ps, model)?)?;
    let a = factor.solve(z)?;
    let d = factor.inverse_diagonal();
    let predictions = (0..z.len()).map(|i| z[i] - a[i] / d[i]).collect();
    let sd = d.iter().map(|v| (1.0 / v).sqrt()).collect();
    Ok(KrigingResult { predictions, sd })
}

/// Leave-one-out cross-validation scores.
pub fn loo_cv(ps: &PointSet, z: &[f64], model: &CorrelationModel) -> Result<PredictionScores> {
    score_holdout(&loo_predictions(ps, z, model)?, z)
}

/// Mean scores over `repeats` random splits holding out `holdout_fraction`
/// of the sites (at least one site on each side).
pub fn resample_scores(
    ps: &PointSet,
    z: &[f64],
    model: &CorrelationModel,
    holdout_fraction: f64,
    repeats: usize,
    seed: u64,
) -> Result<PredictionScores> {
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction {holdout_fraction} must lie in (0, 1)"
        )));
    }
    let n = ps.len();
    if n < 2 || z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n.max(2),
            found: z.len(),
        });
    }
    let k = ((holdout_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let per_repeat: Vec<PredictionScores> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut replicate_rng(seed, r as u64));
            let (test, train) = idx.split_at(k);
            let train_z: Vec<f64> = train.iter().map(|&i| z[i]).collect();
            let truth: Vec<f64> = test.iter().map(|&i| z[i]).collect();
            let res = krige(&ps.subset(train), &train_z, model, &ps.subset(test))?;
            score_holdout(&res, &truth)
        })
        .collect::<Result<_>>()?;
    let m = repeats as f64;
    Ok(PredictionScores {
        rmse: per_repeat.iter().map(|s| s.rmse).sum::<f64>() / m,
        logscore: per_repeat.iter().map(|s| s.logscore).sum::<f64>() / m,
        crps: per_repeat.iter().map(|s| s.crps).sum::<f64>() / m,
        count: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmat::assemble_dense;
    use crate::kernels::{Family, PhiParams};
    use crate::montecarlo::simulate_grf;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square(n: usize, seed: u64) -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointSet::from_flat(2, (0..2 * n).map(|_| rng.gen::<f64>()).collect()).unwrap()
    }

    fn phi_model(nu: f64, mu: f64, beta: f64, nugget: f64, variance: f64) -> CorrelationModel {
        CorrelationModel::new(Family::Phi(PhiParams::new(nu, mu, beta, 2).unwrap()), nugget, variance).unwrap()
    }

    #[test]
    fn interpolates_training_data() {
        let ps = unit_square(40, 41);
        let model = phi_model(1.0, 4.0, 0.1, 0.0, 1.5);
        let z = simulate_grf(&ps, &model, 1).unwrap();
        let res = krige(&ps, &z, &model, &ps).unwrap();
        for i in 0..40 {
            assert!((res.predictions[i] - z[i]).abs() < 1e-10);
            assert!(res.sd[i] < 1e-10);
        }
        let noisy = phi_model(1.0, 4.0, 0.1, 0.2, 1.5);
        let res = krige(&ps, &z, &noisy, &ps.subset(&[3])).unwrap();
        assert_eq!(res.predictions[0], z[3]);
        assert!((res.sd[0] - (0.2f64 * 1.5).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn far_target_and_single_point() {
        let ps = PointSet::new(&[vec![0.0, 0.0]]).unwrap();
        let model = phi_model(0.0, 2.0, 0.1, 0.0, 2.0);
        let far = PointSet::new(&[vec![5.0, 5.0]]).unwrap();
        let res = krige(&ps, &[1.3], &model, &far).unwrap();
        assert_eq!(res.predictions[0], 0.0);
        assert!((res.sd[0] - 2f64.sqrt()).abs() < 1e-15);
        let near = PointSet::new(&[vec![0.05, 0.0]]).unwrap();
        let rho = model.correlation(0.05).unwrap();
        let res = krige(&ps, &[1.3], &model, &near).unwrap();
        assert!((res.predictions[0] - rho * 1.3).abs() < 1e-14);
        assert!((res.sd[0].powi(2) - 2.0 * (1.0 - rho * rho)).abs() < 1e-14);
    }

    #[test]
    fn variance_bounds() {
        let ps = unit_square(80, 42);
        let model = phi_model(0.0, 3.0, 0.05, 0.1, 1.2);
        let z = simulate_grf(&ps, &model, 2).unwrap();
        let res = krige(&ps, &z, &model, &unit_square(50, 43)).unwrap();
        for &s in &res.sd {
            assert!(s >= (0.1f64 * 1.2).sqrt() - 1e-12 && s <= 1.2f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn loo_matches_explicit_refits() {
        for seed in 0..10 {
            let ps = unit_square(30, 100 + seed);
            let model = phi_model(1.0, 5.0, 0.08, 0.05 * (seed % 3) as f64, 1.0 + seed as f64 * 0.1);
            let z = simulate_grf(&ps, &model, seed).unwrap();
            let loo = loo_predictions(&ps, &z, &model).unwrap();
            let sigma = DMatrix::from_row_slice(30, 30, &assemble_dense(&ps, &model).unwrap().to_dense());
            for i in 0..30 {
                let keep: Vec<usize> = (0..30).filter(|&k| k != i).collect();
                let s = DMatrix::from_fn(29, 29, |a, b| sigma[(keep[a], keep[b])]);
                let c = DVector::from_fn(29, |a, _| sigma[(i, keep[a])]);
                let zk = DVector::from_fn(29, |a, _| z[keep[a]]);
                let inv = s.try_inverse().unwrap();
                let pred = (c.transpose() * &inv * zk)[(0, 0)];
                let var = sigma[(i, i)] - (c.transpose() * &inv * &c)[(0, 0)];
                assert!((loo.predictions[i] - pred).abs() < 1e-9, "seed {seed} i {i}");
                assert!((loo.sd[i] - var.sqrt()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn loo_independent_pair() {
        let ps = PointSet::new(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let model = phi_model(0.0, 2.0, 0.01, 0.0, 3.0);
        let r = loo_predictions(&ps, &[0.7, -0.4], &model).unwrap();
        assert!(r.predictions.iter().all(|p| p.abs() < 1e-15));
        for s in r.sd {
            assert!((s - 3f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn loo_agrees_with_holdout_of_one() {
        let ps = unit_square(25, 44);
        let model = phi_model(0.0, 2.5, 0.1, 0.0, 1.0);
        let z = simulate_grf(&ps, &model, 3).unwrap();
        let loo = loo_predictions(&ps, &z, &model).unwrap();
        let keep: Vec<usize> = (1..25).collect();
        let zk: Vec<f64> = keep.iter().map(|&i| z[i]).collect();
        let res = krige(&ps.subset(&keep), &zk, &model, &ps.subset(&[0])).unwrap();
        assert!((res.predictions[0] - loo.predictions[0]).abs() < 1e-10);
        assert!((res.sd[0] - loo.sd[0]).abs() < 1e-10);
    }

    #[test]
    fn resampling_is_reproducible() {
        let ps = unit_square(60, 45);
        let model = phi_model(0.0, 3.0, 0.05, 0.0, 1.0);
        let z = simulate_grf(&ps, &model, 4).unwrap();
        let a = resample_scores(&ps, &z, &model, 0.2, 5, 9).unwrap();
        assert_eq!(a, resample_scores(&ps, &z, &model, 0.2, 5, 9).unwrap());
        assert_eq!(a.count, 12);
        let one = resample_scores(&ps, &z, &model, 0.999, 1, 9).unwrap();
        assert_eq!(one.count, 59);
        assert!(resample_scores(&ps, &z, &model, 0.2, 0, 9).is_err());
    }

    #[test]
    fn true_model_has_lower_logscore() {
        let ps = unit_square(150, 46);
        let truth = phi_model(0.0, 3.0, 0.05, 0.0, 1.0);
        let inflated = phi_model(0.0, 3.0, 0.05, 0.0, 4.0);
        let z = simulate_grf(&ps, &truth, 5).unwrap();
        let a = resample_scores(&ps, &z, &truth, 0.2, 200, 11).unwrap();
        let b = resample_scores(&ps, &z, &inflated, 0.2, 200, 11).unwrap();
        assert!(a.logscore < b.logscore, "{a:?} vs {b:?}");
    }
}
