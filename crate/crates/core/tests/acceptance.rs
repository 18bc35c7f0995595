//! Acceptance suite: one pass/fail line per criterion. Runs without the
//! libtest harness so the report is always printed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wendmat::covmat::{assemble, assemble_dense, cholesky, sparsity_stats, PointSet};
use wendmat::inference::{log_likelihood, profile_sigma2, FitFamily, FixedMask, ParamVector};
use wendmat::kernels::{
    delta_support, gw_closed_form, gw_hypergeometric, gw_integral, gw_series, lambda, CorrelationModel, Family,
    GenWendlandParams, PhiParams,
};
use wendmat::montecarlo::{run_study, Regime, SimConfig};
use wendmat::predict::{crps_gaussian, logscore_gaussian, loo_predictions};
use wendmat::quad::{integrate_with_breaks, QuadOptions};
use wendmat::spectral::{
    convergence_cell, convergence_table, default_z_grid, spectral_convergence, unit_variance_check, MuColumn,
    SpectralModel,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const TABLE_NU: [f64; 6] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5];
const TABLE_MU: [f64; 8] = [5.0, 10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0];
// rows ν, columns λ(2, ν) then TABLE_MU
const TABLE_VALUES: [[f64; 9]; 6] = [
    [
        0.22944, 0.05799, 0.02800, 0.01376, 0.00682, 0.00340, 0.00170, 0.00085, 0.00042,
    ],
    [
        0.25586, 0.11010, 0.05643, 0.02857, 0.01438, 0.00721, 0.00361, 0.00181, 0.00090,
    ],
    [
        0.27001, 0.15470, 0.08346, 0.04345, 0.02218, 0.01121, 0.00564, 0.00283, 0.00141,
    ],
    [
        0.27914, 0.19257, 0.10856, 0.05800, 0.03004, 0.01529, 0.00772, 0.00388, 0.00194,
    ],
    [
        0.28554, 0.22475, 0.13164, 0.07205, 0.03782, 0.01940, 0.00983, 0.00494, 0.00248,
    ],
    [
        0.29029, 0.25230, 0.15279, 0.08552, 0.04549, 0.02350, 0.01195, 0.00603, 0.00303,
    ],
];

fn table_reproduction() -> Outcome {
    let mut cols = vec![MuColumn::Lambda];
    cols.extend(TABLE_MU.iter().map(|&m| MuColumn::Value(m)));
    let report = convergence_table(&TABLE_NU, &cols, 1.0).map_err(|e| e.to_string())?;
    let mut worst = (0.0f64, 0.0, 0.0);
    let mut misses = 0;
    for (i, row) in TABLE_VALUES.iter().enumerate() {
        for (j, &expected) in row.iter().enumerate() {
            let c = report.row(i)[j];
            let dev = (c.max_abs_error - expected).abs();
            if dev > 2e-4 {
                misses += 1;
            }
            if dev > worst.0 {
                worst = (dev, c.nu, c.mu);
            }
        }
    }
    check(
        misses == 0 && report.cells.len() == 54,
        format!(
            "{} of 54 cells within 2e-4; largest deviation {:.2e} at nu={}, mu={}",
            54 - misses,
            worst.0,
            worst.1,
            worst.2
        ),
    )
}

fn compact_supports() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (mu, expected) in [(5.0, 0.231), (10.0, 0.403), (25.0, 0.911)] {
        let d = delta_support(2.0, mu, 0.0338).map_err(|e| e.to_string())?;
        ok &= (d - expected).abs() <= 1e-3;
        parts.push(format!("mu={mu}: {d:.5}"));
    }
    check(ok, parts.join(", "))
}

fn unit_variance() -> Outcome {
    let mut worst = 0.0f64;
    for dim in 1..=3 {
        for nu in [0.0, 1.0, 2.0] {
            let mu = lambda(dim, nu) + 2.0;
            let p = PhiParams::new(nu, mu, 1.0, dim).map_err(|e| e.to_string())?;
            let resid =
                unit_variance_check(&SpectralModel::Phi(p), dim).map_err(|e| format!("d={dim} nu={nu}: {e}"))?;
            worst = worst.max(resid);
        }
    }
    check(worst < 1e-6, format!("largest residual {worst:.2e} over 9 cases"))
}

fn representation_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = (0.0f64, String::new());
    let mut record = |a: f64, b: f64, what: &str, p: &GenWendlandParams, r: f64| {
        let d = (a - b).abs();
        if d > worst.0 {
            worst = (
                d,
                format!("{what} at nu={:.3} mu={:.3} r/support={:.3}", p.nu, p.mu, r / p.support),
            );
        }
    };
    for k in 0..1000 {
        let dim = rng.gen_range(1..=3);
        // every fourth draw uses an integer ν with a closed form
        let nu = if k % 4 == 0 {
            rng.gen_range(1..=3) as f64
        } else {
            rng.gen_range(0.1..3.5)
        };
        let mu = lambda(dim, nu) + rng.gen_range(0.0..6.0);
        let support = rng.gen_range(0.1..3.0);
        let p = GenWendlandParams::new(nu, mu, support, dim).map_err(|e| e.to_string())?;
        let r = support * rng.gen_range(0.0..1.0);
        let integral = gw_integral(r, &p).map_err(|e| e.to_string())?;
        let hyper = gw_hypergeometric(r, &p).map_err(|e| e.to_string())?;
        let series = gw_series(r, &p).map_err(|e| e.to_string())?;
        record(integral, hyper, "integral vs hypergeometric", &p, r);
        record(integral, series, "integral vs series", &p, r);
        if let Some(closed) = gw_closed_form(r, &p).map_err(|e| e.to_string())? {
            record(closed, integral, "closed form vs integral", &p, r);
            record(closed, series, "closed form vs series", &p, r);
        }
    }
    check(
        worst.0 < 1e-8,
        format!("1000 evaluations, largest pairwise gap {:.2e} ({})", worst.0, worst.1),
    )
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn convergence_gaps() -> Outcome {
    let mus = [5.0, 10.0, 20.0, 40.0, 80.0];
    let grid = default_z_grid(1.0, 100);
    let mut parts = Vec::new();
    let mut ok = true;
    for nu in [0.0, 1.0, 2.0] {
        let corr: Vec<f64> = mus
            .iter()
            .map(|&mu| convergence_cell(nu, mu, 1.0).map(|c| c.max_abs_error))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let spec: Vec<f64> = spectral_convergence(nu, &mus, 1.0, 2, &grid)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|g| g.value)
            .collect();
        let ratios: Vec<f64> = (2..mus.len()).map(|k| corr[k] / corr[k - 1]).collect();
        let row_ok =
            strictly_decreasing(&corr) && strictly_decreasing(&spec) && ratios.iter().all(|r| (0.4..=0.6).contains(r));
        ok &= row_ok;
        parts.push(format!(
            "nu={nu}: ratios {}{}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join("/"),
            if row_ok { "" } else { " (FAILED)" }
        ));
    }
    check(ok, parts.join("; "))
}

fn random_points(n: usize, rng: &mut ChaCha8Rng) -> PointSet {
    PointSet::from_flat(2, (0..2 * n).map(|_| rng.gen::<f64>()).collect()).unwrap()
}

fn to_nalgebra(ps: &PointSet, model: &CorrelationModel) -> DMatrix<f64> {
    let n = ps.len();
    let dense = assemble_dense(ps, model).unwrap().to_dense();
    DMatrix::from_row_slice(n, n, &dense)
}

fn linear_algebra_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_solve = 0.0f64;
    let mut worst_logdet = 0.0f64;
    let mut worst_loo = 0.0f64;
    for (k, n) in [60, 120, 200, 300, 300].into_iter().enumerate() {
        let ps = random_points(n, &mut rng);
        let nu = [0.0, 0.5, 1.0, 2.0, 1.3][k];
        let mu = lambda(2, nu) + rng.gen_range(0.5..4.0);
        let beta = rng.gen_range(0.02..0.08);
        let nugget = if k % 2 == 0 { 0.0 } else { 0.1 };
        let model = CorrelationModel::new(Family::Phi(PhiParams::new(nu, mu, beta, 2).unwrap()), nugget, 1.7).unwrap();
        let m = assemble(&ps, &model).map_err(|e| e.to_string())?;
        if !m.is_sparse() {
            return Err(format!("instance {k} was not assembled sparse"));
        }
        let factor = cholesky(&m).map_err(|e| e.to_string())?;
        let a = to_nalgebra(&ps, &model);
        let chol = a.clone().cholesky().ok_or("oracle Cholesky failed")?;
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = factor.solve(&b).map_err(|e| e.to_string())?;
        let x_ref = chol.solve(&DVector::from_vec(b.clone()));
        let scale = x_ref.amax();
        worst_solve = worst_solve.max(
            x.iter()
                .zip(x_ref.iter())
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max)
                / scale,
        );
        let logdet_ref: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        worst_logdet = worst_logdet.max((factor.logdet() - logdet_ref).abs() / logdet_ref.abs().max(1.0));

        // leave-one-out against the explicit inverse
        let inv = a.try_inverse().ok_or("oracle inverse failed")?;
        let z = factor.correlate(&b).map_err(|e| e.to_string())?;
        let alpha = &inv * DVector::from_vec(z.clone());
        let loo = loo_predictions(&ps, &z, &model).map_err(|e| e.to_string())?;
        for i in 0..n {
            let pred = z[i] - alpha[i] / inv[(i, i)];
            let sd = (1.0 / inv[(i, i)]).sqrt();
            worst_loo = worst_loo
                .max((loo.predictions[i] - pred).abs())
                .max((loo.sd[i] - sd).abs());
        }
    }

    // leave-one-out against n explicit refits
    let mut worst_refit = 0.0f64;
    for k in 0..10 {
        let n = 12 + 2 * k;
        let ps = random_points(n, &mut rng);
        let model = CorrelationModel::new(
            Family::Phi(PhiParams::new(1.0, 3.5, 0.15, 2).unwrap()),
            if k % 2 == 0 { 0.0 } else { 0.2 },
            0.8,
        )
        .unwrap();
        let a = to_nalgebra(&ps, &model);
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let loo = loo_predictions(&ps, &z, &model).map_err(|e| e.to_string())?;
        for i in 0..n {
            let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let sub = a.select_rows(&keep).select_columns(&keep);
            let c = DVector::from_iterator(n - 1, keep.iter().map(|&j| a[(i, j)]));
            let zk = DVector::from_iterator(n - 1, keep.iter().map(|&j| z[j]));
            let w = sub.cholesky().ok_or("refit Cholesky failed")?.solve(&c);
            let pred = w.dot(&zk);
            let sd = (a[(i, i)] - w.dot(&c)).sqrt();
            worst_refit = worst_refit
                .max((loo.predictions[i] - pred).abs())
                .max((loo.sd[i] - sd).abs());
        }
    }
    check(
        worst_solve < 1e-8 && worst_logdet < 1e-8 && worst_loo < 1e-8 && worst_refit < 1e-9,
        format!(
            "solve {worst_solve:.1e}, logdet {worst_logdet:.1e}, loo vs inverse {worst_loo:.1e} (n<=300); loo vs refits {worst_refit:.1e} (n<=30)"
        ),
    )
}

fn profile_closed_form() -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for k in 0..4 {
        let ps = random_points(150, &mut rng);
        let (family, theta) = if k % 2 == 0 {
            (
                FitFamily::Phi { nu: 1.0 },
                ParamVector {
                    sigma2: 1.0,
                    beta: 0.05,
                    mu_star: Some(1.0 / 4.0),
                    nugget: 0.1 * k as f64,
                },
            )
        } else {
            (
                FitFamily::Matern { nu: 1.5 },
                ParamVector {
                    sigma2: 1.0,
                    beta: 0.1,
                    mu_star: None,
                    nugget: 0.05,
                },
            )
        };
        let z: Vec<f64> = (0..150).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (s2, ll) = profile_sigma2(&theta, family, &ps, &z).map_err(|e| e.to_string())?;
        // σ̂² = zᵀR̃⁻¹z/n with R̃ the correlation including the nugget fraction
        let r = to_nalgebra(&ps, &theta.model(family, 2).unwrap());
        let zv = DVector::from_vec(z.clone());
        let closed = zv.dot(&r.cholesky().unwrap().solve(&zv)) / 150.0;
        worst = worst.max((s2 - closed).abs() / closed);
        let at = |v: f64| log_likelihood(&ParamVector { sigma2: v, ..theta }, family, &ps, &z).unwrap();
        if (at(s2) - ll).abs() > 1e-9 * ll.abs() || at(s2 * 1.001) >= ll || at(s2 * 0.999) >= ll {
            return Err(format!("profile log-likelihood is not maximal at sigma2 = {s2}"));
        }
    }
    Ok(worst)
}

fn ml_sanity_and_clt() -> Outcome {
    let profile = profile_closed_form()?;
    let mut parts = vec![format!("profile sigma2 rel. error {profile:.1e}")];
    let mut ok = profile < 1e-10;
    for (nu, seed) in [(0.0, 11), (1.0, 12)] {
        let mu = lambda(2, nu) + 3.0;
        let mut cfg = SimConfig::unit_square(500, 200, seed, Regime::Support(0.6));
        cfg.standardize = false;
        let fixed = FixedMask {
            mu: true,
            ..FixedMask::default()
        };
        let start = Instant::now();
        let report = run_study(&cfg, nu, mu, &fixed).map_err(|e| e.to_string())?;
        let var = report.microergodic_variance();
        ok &= (1.5..=2.5).contains(&var);
        parts.push(format!(
            "nu={nu} mu={mu}: var {var:.3} from {} replicates ({} failed, {:.0} s)",
            report.records.len(),
            report.failures.len(),
            start.elapsed().as_secs_f64()
        ));
    }
    check(ok, parts.join("; "))
}

fn normal_cdf_oracle(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

fn scoring() -> Outcome {
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    let mut worst_crps = 0.0f64;
    let mut worst_log = 0.0f64;
    for (m, s) in [(0.0, 1.0), (2.5, 0.4), (-1.0, 3.0)] {
        for k in 0..=160 {
            let z = -4.0 + 0.05 * k as f64;
            let y = m + z * s;
            let (lo, hi) = (m.min(y) - 15.0 * s, m.max(y) + 15.0 * s);
            let mut breaks = vec![lo, y, hi];
            if m != y {
                breaks.push(m);
            }
            breaks.sort_by(f64::total_cmp);
            let numeric = integrate_with_breaks(
                &mut |x| {
                    let d = normal_cdf_oracle((x - m) / s) - if x >= y { 1.0 } else { 0.0 };
                    d * d
                },
                &breaks,
                &opts,
            )
            .map_err(|e| e.to_string())?
            .value;
            worst_crps = worst_crps.max((crps_gaussian(m, s, y) - numeric).abs());
            let density = (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
            worst_log = worst_log.max((logscore_gaussian(m, s, y) + density.ln()).abs());
        }
    }
    check(
        worst_crps < 1e-6 && worst_log < 1e-12,
        format!("crps vs quadrature {worst_crps:.1e}, log score vs density {worst_log:.1e}"),
    )
}

fn sparsity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ps = random_points(1000, &mut rng);
    let mut pz = Vec::new();
    for mu in [1.5, 2.0, 3.0, 4.5] {
        let model = CorrelationModel::new(Family::Phi(PhiParams::new(0.0, mu, 0.02, 2).unwrap()), 0.0, 1.0).unwrap();
        pz.push(sparsity_stats(&assemble(&ps, &model).map_err(|e| e.to_string())?).percent_zero);
    }
    let monotone = pz.windows(2).all(|w| w[1] <= w[0]);

    let big = random_points(4000, &mut rng);
    let model = CorrelationModel::new(Family::Phi(PhiParams::new(0.0, 2.0, 0.05, 2).unwrap()), 0.0, 1.0).unwrap();
    let sparse = assemble(&big, &model).map_err(|e| e.to_string())?;
    let zero = sparsity_stats(&sparse).percent_zero;
    let dense = sparse.to_dense_matrix();
    let t = Instant::now();
    let fs = cholesky(&sparse).map_err(|e| e.to_string())?;
    let sparse_time = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let fd = cholesky(&dense).map_err(|e| e.to_string())?;
    let dense_time = t.elapsed().as_secs_f64();
    let agree = (fs.logdet() - fd.logdet()).abs() < 1e-8 * fd.logdet().abs().max(1.0);
    check(
        monotone && zero >= 0.9 && sparse_time < dense_time && agree,
        format!(
            "percent_zero {} for mu = 1.5/2/3/4.5; n=4000 at percent_zero {zero:.3}: sparse {sparse_time:.3} s, dense {dense_time:.3} s",
            pz.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join("/")
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("table reproduction", table_reproduction),
        ("compact supports", compact_supports),
        ("spectral normalization identity", unit_variance),
        ("representation consistency", representation_consistency),
        ("convergence to the Matern limit", convergence_gaps),
        ("linear algebra oracles", linear_algebra_oracles),
        ("ML sanity and microergodic CLT", ml_sanity_and_clt),
        ("scoring correctness", scoring),
        ("sparsity behavior", sparsity),
    ];
    // ACCEPTANCE_ONLY=1,5 runs a subset
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    let mut ran = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(k + 1))) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name} ({secs:.1} s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name} ({secs:.1} s): {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
