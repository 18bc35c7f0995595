use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use rand::Rng;

use wendmat::covmat::{assemble, read_points_csv, sparsity_stats, PointSet, SpatialData};
use wendmat::inference::{default_init, fit_ml_with, Boundary, FitFamily, FitOptions, FixedMask, Param, ParamVector};
use wendmat::kernels::{lambda, practical_range, CorrelationModel, Family, GenWendlandParams, MaternParams, PhiParams};
use wendmat::montecarlo::{beta_for_support, replicate_rng, run_study, simulate_grf_with, Regime, SimConfig};
use wendmat::predict::{krige, loo_cv, resample_scores, score_holdout, PredictionScores};
use wendmat::spectral::{convergence_table, MuColumn};

use crate::params::{family_name, full, parse_pairs, ModelFile};
use crate::{
    CliError, ConvergeArgs, CvArgs, EvalArgs, FamilyArg, FitArgs, ModelArgs, PredictArgs, SimulateArgs, StudyArgs,
};

const COORD_NAMES: [&str; 3] = ["x", "y", "z"];

/// Reproducibility header: version, command and resolved parameters, as
/// `#` comment lines.
struct Header(String);

impl Header {
    fn new(command: &str) -> Self {
        Header(format!("# wendmat {} {command}\n", env!("CARGO_PKG_VERSION")))
    }

    fn add(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "# {key}={value}");
    }
}

/// Fails early when the output file could not be created.
fn check_output(path: Option<&Path>) -> Result<(), CliError> {
    if let Some(p) = path {
        let parent = p
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(CliError::Usage(format!(
                "{}: output directory does not exist",
                p.display()
            )));
        }
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes to `path`, or to stdout without one.
fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn read_data(path: &Path) -> Result<SpatialData, CliError> {
    let file = File::open(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_points_csv(file).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_observed(path: &Path) -> Result<(PointSet, Vec<f64>), CliError> {
    let d = read_data(path)?;
    match d.values {
        Some(v) => Ok((d.points, v)),
        None => Err(CliError::Usage(format!("{}: no 'value' column", path.display()))),
    }
}

fn read_model_file(path: &Path) -> Result<ModelFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ModelFile::parse(&text)
}

fn check_dim(expected: usize, ps: &PointSet, what: &str) -> Result<(), CliError> {
    if ps.dim() != expected {
        return Err(CliError::Usage(format!(
            "{what} has {} coordinate columns but the model is {expected}-dimensional",
            ps.dim()
        )));
    }
    Ok(())
}

fn points_csv(ps: &PointSet, extra: &[(&str, &[f64])]) -> String {
    let mut s = String::new();
    let mut cols: Vec<&str> = COORD_NAMES[..ps.dim()].to_vec();
    cols.extend(extra.iter().map(|(name, _)| *name));
    let _ = writeln!(s, "{}", cols.join(","));
    for i in 0..ps.len() {
        let mut row: Vec<String> = ps.point(i).iter().map(|&c| full(c)).collect();
        row.extend(extra.iter().map(|(_, v)| full(v[i])));
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// A correlation model resolved and validated from the model flags.
struct Resolved {
    model: CorrelationModel,
    dim: usize,
}

fn resolve_model(m: &ModelArgs, header: &mut Header) -> Result<Resolved, CliError> {
    if !(1..=3).contains(&m.dim) {
        return Err(CliError::Usage(format!("--dim {} must be 1, 2 or 3", m.dim)));
    }
    let need =
        |v: Option<f64>, flag: &str| v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this family")));
    let family = match m.family {
        FamilyArg::Phi => {
            let mu = need(m.mu, "mu")?;
            let beta = match (m.beta, m.support) {
                (Some(b), None) => b,
                (None, Some(d)) => beta_for_support(m.nu, mu, d)?,
                _ => return Err(CliError::Usage("phi takes exactly one of --beta and --support".into())),
            };
            Family::Phi(PhiParams::new(m.nu, mu, beta, m.dim)?)
        }
        FamilyArg::Matern => {
            if m.mu.is_some() || m.support.is_some() {
                return Err(CliError::Usage("matern takes neither --mu nor --support".into()));
            }
            Family::Matern(MaternParams::new(m.nu, need(m.beta, "beta")?)?)
        }
        FamilyArg::Wendland => {
            if m.beta.is_some() {
                return Err(CliError::Usage("wendland is scaled by --support, not --beta".into()));
            }
            Family::GenWendland(GenWendlandParams::new(
                m.nu,
                need(m.mu, "mu")?,
                need(m.support, "support")?,
                m.dim,
            )?)
        }
    };
    let model = CorrelationModel::new(family, m.nugget, m.sigma2)?;
    match family {
        Family::Phi(p) => {
            header.add("family", "phi");
            header.add("nu", full(p.nu));
            header.add("mu", full(p.mu));
            header.add("beta", full(p.beta));
        }
        Family::Matern(p) => {
            header.add("family", "matern");
            header.add("nu", full(p.nu));
            header.add("beta", full(p.beta));
        }
        Family::GenWendland(p) => {
            header.add("family", "wendland");
            header.add("nu", full(p.nu));
            header.add("mu", full(p.mu));
        }
    }
    if let Some(delta) = model.support()? {
        header.add("support", full(delta));
    }
    header.add("sigma2", full(m.sigma2));
    header.add("nugget", full(m.nugget));
    header.add("dim", m.dim);
    Ok(Resolved { model, dim: m.dim })
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("--r-grid '{spec}': expected a comma list or start:stop:count"));
    let grid: Vec<f64> = if let [a, b, k] = spec.split(':').collect::<Vec<_>>()[..] {
        let (a, b) = (
            a.trim().parse::<f64>().map_err(|_| bad())?,
            b.trim().parse::<f64>().map_err(|_| bad())?,
        );
        let k: usize = k.trim().parse().map_err(|_| bad())?;
        if k < 2 {
            return Err(bad());
        }
        (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if let Some(r) = grid.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
        return Err(CliError::Usage(format!("distance {r} must be finite and nonnegative")));
    }
    Ok(grid)
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    check_output(a.output.as_deref())?;
    let mut header = Header::new("eval");
    let Resolved { model, .. } = resolve_model(&a.model, &mut header)?;
    let range = practical_range(&model, 0.05)?;
    let support = model.support()?;
    let grid = match &a.r_grid {
        Some(s) => parse_grid(s)?,
        None => {
            let hi = support.unwrap_or(1.5 * range);
            (0..=20).map(|i| hi * i as f64 / 20.0).collect()
        }
    };
    header.add("practical_range", full(range));
    let rows: Vec<(f64, f64, f64)> = grid
        .iter()
        .map(|&r| Ok((r, model.correlation(r)?, model.covariance(r)?)))
        .collect::<Result<_, wendmat::Error>>()?;

    print!("{}", header.0);
    if let Some(d) = support {
        println!("delta = {d:.5}");
    }
    println!("practical_range = {range:.5}");
    println!("{:>12} {:>12} {:>12}", "r", "rho", "covariance");
    for (r, rho, c) in &rows {
        println!("{r:>12.5} {rho:>12.5} {c:>12.5}");
    }
    if let Some(path) = &a.output {
        let mut csv = header.0.clone();
        csv.push_str("r,rho,covariance\n");
        for (r, rho, c) in &rows {
            let _ = writeln!(csv, "{},{},{}", full(*r), full(*rho), full(*c));
        }
        write_file(path, &csv)?;
    }
    Ok(())
}

pub fn converge(a: &ConvergeArgs) -> Result<(), CliError> {
    check_output(a.output.as_deref())?;
    if a.nu_list.is_empty() {
        return Err(CliError::Usage("--nu-list is empty".into()));
    }
    if !(a.beta > 0.0 && a.beta.is_finite()) {
        return Err(CliError::Usage(format!("--beta {} must be positive", a.beta)));
    }
    let mut columns = vec![MuColumn::Lambda];
    columns.extend(a.mu_list.iter().map(|&m| MuColumn::Value(m)));
    for &nu in &a.nu_list {
        for c in &columns {
            let mu = c.resolve(nu);
            if !(mu >= lambda(2, nu)) {
                return Err(CliError::Usage(format!(
                    "mu = {mu} is below lambda(2, {nu}) = {}",
                    lambda(2, nu)
                )));
            }
        }
    }
    let report = convergence_table(&a.nu_list, &columns, a.beta)?;

    let mut header = Header::new("converge-table");
    header.add(
        "nu_list",
        a.nu_list.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
    );
    header.add(
        "mu_list",
        a.mu_list.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
    );
    header.add("beta", full(a.beta));
    print!("{}", header.0);
    let mut line = format!("{:>6} {:>9}", "nu", "lambda");
    for m in &a.mu_list {
        let _ = write!(line, " {:>9}", m);
    }
    println!("{line}");
    let mut violations = Vec::new();
    for (i, &nu) in a.nu_list.iter().enumerate() {
        let row = report.row(i);
        let mut line = format!("{nu:>6.1}");
        for c in row {
            let _ = write!(line, " {:>9.5}", c.max_abs_error);
        }
        println!("{line}");
        for w in row.windows(2) {
            if !(w[1].max_abs_error < w[0].max_abs_error) {
                violations.push(format!(
                    "nu = {nu}: error at mu = {} is not below the error at mu = {}",
                    w[1].mu, w[0].mu
                ));
            }
        }
    }
    if let Some(path) = &a.output {
        let mut buf = header.0.clone().into_bytes();
        report.write_csv(&mut buf)?;
        write_file(path, &String::from_utf8_lossy(&buf))?;
    }
    if violations.is_empty() {
        Ok(())
    } else {
        for v in &violations {
            eprintln!("{v}");
        }
        Err(CliError::Check(format!(
            "{} monotonicity violation(s) in mu",
            violations.len()
        )))
    }
}

fn param_by_name(name: &str) -> Result<Param, CliError> {
    match name {
        "sigma2" => Ok(Param::Sigma2),
        "beta" => Ok(Param::Beta),
        "mu" => Ok(Param::MuStar),
        "nugget" => Ok(Param::Nugget),
        other => Err(CliError::Usage(format!(
            "unknown parameter '{other}' (expected sigma2, beta, mu or nugget)"
        ))),
    }
}

fn parse_assignment(s: &str) -> Result<(Param, f64), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("expected NAME=VALUE, found '{s}'")))?;
    let p = param_by_name(k.trim())?;
    let v: f64 = v.trim().parse().map_err(|e| CliError::Usage(format!("'{s}': {e}")))?;
    // μ is given on its natural scale and stored as μ* = 1/μ
    Ok((p, if p == Param::MuStar { 1.0 / v } else { v }))
}

fn fit_family(family: FamilyArg, nu: f64) -> Result<FitFamily, CliError> {
    match family {
        FamilyArg::Phi => Ok(FitFamily::Phi { nu }),
        FamilyArg::Matern => Ok(FitFamily::Matern { nu }),
        FamilyArg::Wendland => Err(CliError::Usage("fit supports the phi and matern families".into())),
    }
}

fn set_fixed(mask: &mut FixedMask, p: Param) {
    match p {
        Param::Sigma2 => mask.sigma2 = true,
        Param::Beta => mask.beta = true,
        Param::MuStar => mask.mu = true,
        Param::Nugget => mask.nugget = true,
    }
}

fn param_label(p: Param) -> &'static str {
    match p {
        Param::MuStar => "mu_star",
        other => other.name(),
    }
}

fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::MuStarLower => "mu_star_lower",
        Boundary::MuStarUpper => "mu_star_upper",
    }
}

pub fn fit(a: &FitArgs) -> Result<(), CliError> {
    check_output(a.output.as_deref())?;
    let family = fit_family(a.family, a.nu)?;
    let fixes = a
        .fix
        .iter()
        .map(|s| parse_assignment(s))
        .collect::<Result<Vec<_>, _>>()?;
    let inits = a
        .init
        .iter()
        .map(|s| parse_assignment(s))
        .collect::<Result<Vec<_>, _>>()?;
    let is_matern = matches!(family, FitFamily::Matern { .. });
    if is_matern && fixes.iter().chain(&inits).any(|(p, _)| *p == Param::MuStar) {
        return Err(CliError::Usage("the matern family has no mu parameter".into()));
    }
    let (ps, z) = read_observed(&a.data)?;
    let dim = ps.dim();

    let mut theta: ParamVector = default_init(&ps, &z, family)?;
    let mut fixed = FixedMask::default();
    for &(p, v) in &inits {
        theta.set(p, v);
    }
    for &(p, v) in &fixes {
        theta.set(p, v);
        set_fixed(&mut fixed, p);
    }
    theta.validate(family, dim)?;
    let opts = FitOptions {
        max_iterations: a.max_iter,
        fisher: !a.no_fisher,
        ..FitOptions::default()
    };
    let res = fit_ml_with(&ps, &z, family, &fixed, &theta, &opts)?;

    let mut header = Header::new("fit");
    header.add("data", a.data.display());
    header.add("n", ps.len());
    header.add("max_iter", a.max_iter);
    header.add("spread_tol", full(opts.spread_tol));
    for (label, p) in [
        ("sigma2", Param::Sigma2),
        ("beta", Param::Beta),
        ("mu_star", Param::MuStar),
        ("nugget", Param::Nugget),
    ] {
        if p == Param::MuStar && is_matern {
            continue;
        }
        let state = if res.free.contains(&p) { "free" } else { "fixed" };
        header.add(&format!("init_{label}"), format!("{} ({state})", full(theta.get(p))));
    }

    let out = ModelFile {
        family,
        dim,
        theta: res.theta,
    };
    println!("{:<14}{}", "family", family_name(family));
    println!("{:<14}{:.5}", "nu", family.nu());
    println!("{:<14}{}", "n", ps.len());
    println!("{:<14}{:>14} {:>14}", "parameter", "estimate", "std_error");
    let mut kv = header.0.clone();
    kv.push_str(&out.render());
    for p in [Param::Sigma2, Param::Beta, Param::MuStar, Param::Nugget] {
        if p == Param::MuStar && is_matern {
            continue;
        }
        let se = res
            .free
            .iter()
            .position(|&q| q == p)
            .and_then(|k| res.std_errors.get(k).copied());
        let se_text = match se {
            Some(s) => format!("{s:>14.5}"),
            None if res.free.contains(&p) => format!("{:>14}", "-"),
            None => format!("{:>14}", "fixed"),
        };
        println!("{:<14}{:>14.5} {se_text}", param_label(p), res.theta.get(p));
        if let Some(s) = se {
            let _ = writeln!(kv, "se_{}={}", param_label(p), full(s));
        }
    }
    if let Some(mu) = res.theta.mu(family, dim) {
        println!("{:<14}{:>14.5}", "mu", mu);
    }
    let boundary = if res.boundary.is_empty() {
        "none".to_string()
    } else {
        res.boundary
            .iter()
            .map(|b| boundary_name(*b))
            .collect::<Vec<_>>()
            .join(",")
    };
    println!("{:<14}{:.5}", "loglik", res.loglik);
    println!("{:<14}{:.5}", "aic", res.aic);
    println!("{:<14}{:.5}", "microergodic", res.microergodic);
    println!("{:<14}{}", "iterations", res.iterations);
    println!("{:<14}{}", "boundary", boundary);
    let _ = writeln!(kv, "loglik={}", full(res.loglik));
    let _ = writeln!(kv, "aic={}", full(res.aic));
    let _ = writeln!(kv, "microergodic={}", full(res.microergodic));
    let _ = writeln!(kv, "iterations={}", res.iterations);
    let _ = writeln!(kv, "boundary={boundary}");
    let _ = writeln!(kv, "n={}", ps.len());
    if let Some(path) = &a.output {
        write_file(path, &kv)?;
    }
    Ok(())
}

fn uniform_unit_points(n: usize, dim: usize, seed: u64) -> Result<PointSet, CliError> {
    let mut rng = replicate_rng(seed, 0);
    let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
    Ok(PointSet::from_flat(dim, coords)?)
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    check_output(a.output.as_deref())?;
    let mut header = Header::new("simulate");
    let Resolved { model, dim } = resolve_model(&a.model, &mut header)?;
    header.add("seed", a.seed);
    let ps = match &a.locations {
        Some(path) => {
            let ps = read_data(path)?.points;
            check_dim(dim, &ps, &path.display().to_string())?;
            header.add("locations", path.display());
            ps
        }
        None => {
            if a.n == 0 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
            header.add("n", a.n);
            uniform_unit_points(a.n, dim, a.seed)?
        }
    };
    let z = simulate_grf_with(&ps, &model, &mut replicate_rng(a.seed, 1))?;
    let mut csv = header.0.clone();
    csv.push_str(&points_csv(&ps, &[("value", &z)]));
    emit(a.output.as_deref(), &csv)?;
    if let Some(p) = &a.output {
        println!("wrote {} simulated values to {}", z.len(), p.display());
    }
    Ok(())
}

pub fn study(a: &StudyArgs) -> Result<(), CliError> {
    check_output(a.output.as_deref())?;
    let mut fixed = FixedMask::default();
    for name in &a.fix {
        match param_by_name(name.trim())? {
            Param::Nugget => log::info!("the nugget is always held at zero in studies"),
            p => set_fixed(&mut fixed, p),
        }
    }
    let regime = match (a.support, a.beta) {
        (_, Some(b)) => Regime::Beta(b),
        (Some(d), None) => Regime::Support(d),
        (None, None) => Regime::Support(0.6),
    };
    // validates ν, μ and the scale before any replicate runs
    let beta = match regime {
        Regime::Support(d) => beta_for_support(a.nu, a.mu, d)?,
        Regime::Beta(b) => b,
    };
    PhiParams::new(a.nu, a.mu, beta, 2)?;
    let mut cfg = SimConfig::unit_square(a.n, a.replicates, a.seed, regime);
    cfg.sigma2 = a.sigma2;
    cfg.standardize = !a.no_standardize;
    cfg.fit.max_iterations = a.max_iter;
    let report = run_study(&cfg, a.nu, a.mu, &fixed)?;

    let mut header = Header::new("study");
    header.add("family", "phi");
    header.add("nu", full(a.nu));
    header.add("mu", full(a.mu));
    header.add("beta", full(beta));
    if let Regime::Support(d) = regime {
        header.add("support", full(d));
    }
    header.add("sigma2", full(a.sigma2));
    header.add("n", a.n);
    header.add("replicates", a.replicates);
    header.add("seed", a.seed);
    header.add(
        "free",
        report.free.iter().map(|p| p.name()).collect::<Vec<_>>().join(","),
    );
    header.add("max_iter", a.max_iter);
    print!("{}", header.0);
    println!(
        "{:<14}{:>10} {:>10} {:>10} {:>10} {:>10} {:>9}",
        "statistic", "min", "q1", "median", "q3", "max", "outliers"
    );
    for (name, s) in report.summaries() {
        println!(
            "{:<14}{:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>9}",
            name, s.min, s.q1, s.median, s.q3, s.max, s.outliers
        );
    }
    if report.records.len() > 1 {
        println!(
            "microergodic variance (target 2) = {:.5}",
            report.microergodic_variance()
        );
    }
    println!("failed replicates = {} of {}", report.failures.len(), a.replicates);
    if let Some(path) = &a.output {
        let mut buf = header.0.clone().into_bytes();
        report.write_csv(&mut buf)?;
        write_file(path, &String::from_utf8_lossy(&buf))?;
    }
    Ok(())
}

fn print_scores(s: &PredictionScores) {
    println!("{:<14}{:.5}", "rmse", s.rmse);
    println!("{:<14}{:.5}", "logscore", s.logscore);
    println!("{:<14}{:.5}", "crps", s.crps);
    println!("{:<14}{}", "count", s.count);
}

pub fn predict(a: &PredictArgs) -> Result<(), CliError> {
    check_output(a.output.as_deref())?;
    let mf = read_model_file(&a.params)?;
    let model = mf.theta.model(mf.family, mf.dim)?;
    let (train, z) = read_observed(&a.train)?;
    let targets = read_data(&a.targets)?;
    check_dim(mf.dim, &train, "training data")?;
    check_dim(mf.dim, &targets.points, "target data")?;
    let res = krige(&train, &z, &model, &targets.points)?;
    let scores = targets.values.as_ref().map(|t| score_holdout(&res, t)).transpose()?;

    let mut header = Header::new("predict");
    header.add("train", a.train.display());
    header.add("targets", a.targets.display());
    for (k, v) in parse_pairs(&mf.render())? {
        header.add(&k, v);
    }
    let mut csv = header.0.clone();
    csv.push_str(&points_csv(
        &targets.points,
        &[("yhat", &res.predictions), ("sd", &res.sd)],
    ));
    emit(a.output.as_deref(), &csv)?;
    if let Some(p) = &a.output {
        println!("wrote {} predictions to {}", res.predictions.len(), p.display());
        if let Some(s) = &scores {
            print_scores(s);
        }
    } else if let Some(s) = &scores {
        eprintln!(
            "rmse={:.5} logscore={:.5} crps={:.5} count={}",
            s.rmse, s.logscore, s.crps, s.count
        );
    }
    Ok(())
}

pub fn cv(a: &CvArgs) -> Result<(), CliError> {
    check_output(a.output.as_deref())?;
    let mf = read_model_file(&a.params)?;
    let model = mf.theta.model(mf.family, mf.dim)?;
    let (ps, z) = read_observed(&a.data)?;
    check_dim(mf.dim, &ps, "data")?;
    if let Some(f) = a.holdout {
        if !(f > 0.0 && f < 1.0) {
            return Err(CliError::Usage(format!("--holdout {f} must lie in (0, 1)")));
        }
    }
    let stats = {
        let m = assemble(&ps, &model)?;
        (m.is_sparse(), sparsity_stats(&m))
    };
    let scores = match a.holdout {
        None => loo_cv(&ps, &z, &model)?,
        Some(f) => resample_scores(&ps, &z, &model, f, a.repeats, a.seed)?,
    };

    let mut header = Header::new("cv");
    header.add("data", a.data.display());
    header.add("params", a.params.display());
    match a.holdout {
        None => header.add("scheme", "leave-one-out"),
        Some(f) => {
            header.add(
                "scheme",
                format!("holdout fraction={f} repeats={} seed={}", a.repeats, a.seed),
            );
        }
    }
    let storage = if stats.0 { "sparse" } else { "dense" };
    print!("{}", header.0);
    println!("{:<14}{}", "family", family_name(mf.family));
    println!("{:<14}{storage}", "storage");
    println!("{:<14}{:.5}", "percent_zero", stats.1.percent_zero);
    println!("{:<14}{}", "stored_nnz", stats.1.stored_nnz);
    print_scores(&scores);
    if let Some(path) = &a.output {
        let mut kv = header.0.clone();
        kv.push_str(&mf.render());
        let _ = writeln!(kv, "storage={storage}");
        let _ = writeln!(kv, "percent_zero={}", full(stats.1.percent_zero));
        let _ = writeln!(kv, "rmse={}", full(scores.rmse));
        let _ = writeln!(kv, "logscore={}", full(scores.logscore));
        let _ = writeln!(kv, "crps={}", full(scores.crps));
        let _ = writeln!(kv, "count={}", scores.count);
        write_file(path, &kv)?;
    }
    Ok(())
}
