use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

fn wendmat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wendmat"))
        .args(args)
        .output()
        .expect("failed to launch wendmat")
}

fn ok(args: &[&str]) -> String {
    let out = wendmat(args);
    assert!(
        out.status.success(),
        "wendmat {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn key_values(path: &Path) -> HashMap<String, String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

fn num(map: &HashMap<String, String>, key: &str) -> f64 {
    map[key].parse().unwrap()
}

/// Data rows of a CSV written by the CLI (comments and header dropped).
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn simulate_phi(dir: &Path, name: &str, n: usize, seed: u64) -> std::path::PathBuf {
    let path = dir.join(name);
    ok(&[
        "simulate",
        "--family",
        "phi",
        "--nu",
        "0",
        "--mu",
        "2",
        "--beta",
        "0.15",
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "-o",
        p(&path),
    ]);
    path
}

#[test]
fn eval_reports_support() {
    let out = ok(&[
        "eval",
        "--family",
        "phi",
        "--nu",
        "2",
        "--mu",
        "5",
        "--beta",
        "0.0338",
        "--r-grid",
        "0.1,0.3,1",
    ]);
    let delta: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("delta = "))
        .expect("no delta line")
        .parse()
        .unwrap();
    assert!((delta - 0.231).abs() < 1e-3, "delta = {delta}");
    let last: Vec<&str> = out.lines().last().unwrap().split_whitespace().collect();
    assert_eq!(last, ["1.00000", "0.00000", "0.00000"]);
}

#[test]
fn eval_beyond_support_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eval.csv");
    ok(&[
        "eval",
        "--family",
        "phi",
        "--nu",
        "0",
        "--mu",
        "3",
        "--beta",
        "0.1",
        "--r-grid",
        "0:2:41",
        "-o",
        p(&path),
    ]);
    let rows = csv_rows(&path);
    assert_eq!(rows.len(), 41);
    let delta = 0.1 * 3.0; // Γ(μ+1)/Γ(μ) = μ at ν = 0
    for row in rows {
        let r: f64 = row[0].parse().unwrap();
        let rho: f64 = row[1].parse().unwrap();
        if r >= delta - 1e-12 {
            assert_eq!(rho, 0.0, "r = {r}");
        } else {
            assert!(rho > 0.0);
        }
    }
}

#[test]
fn eval_matern_exponential() {
    let out = ok(&[
        "eval", "--family", "matern", "--nu", "0.5", "--beta", "0.4", "--r-grid", "0.4",
    ]);
    assert!(out.lines().last().unwrap().contains("0.36788"));
}

#[test]
fn eval_rejects_mu_below_lambda() {
    let out = wendmat(&["eval", "--family", "phi", "--nu", "1", "--mu", "2", "--beta", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lambda"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn converge_table_cells() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    ok(&[
        "converge-table",
        "--nu-list",
        "0,1.5",
        "--mu-list",
        "10,160",
        "-o",
        p(&path),
    ]);
    let cells: Vec<(f64, f64, f64)> = csv_rows(&path)
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    let get = |nu: f64, mu: f64| cells.iter().find(|c| c.0 == nu && c.1 == mu).unwrap().2;
    assert!((get(0.0, 1.5) - 0.22944).abs() < 2e-4);
    assert!((get(0.0, 10.0) - 0.02800).abs() < 2e-4);
    assert!((get(1.5, 160.0) - 0.00772).abs() < 2e-4);
}

#[test]
fn converge_table_flags_monotonicity_violation() {
    let out = wendmat(&["converge-table", "--nu-list", "0", "--mu-list", "20,10"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate_phi(dir.path(), "a.csv", 150, 7);
    let b = simulate_phi(dir.path(), "b.csv", 150, 7);
    let c = simulate_phi(dir.path(), "c.csv", 150, 8);
    let (a, b, c) = (
        std::fs::read(a).unwrap(),
        std::fs::read(b).unwrap(),
        std::fs::read(c).unwrap(),
    );
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# wendmat "));
    assert!(text.contains("# seed=7"));
    assert!(text.lines().any(|l| l == "x,y,value"));
}

#[test]
fn invalid_flags_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("never.csv");
    let out = wendmat(&[
        "simulate",
        "--family",
        "phi",
        "--nu",
        "0",
        "--mu",
        "1",
        "--beta",
        "0.1",
        "-o",
        p(&path),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
    let out = wendmat(&[
        "simulate",
        "--family",
        "matern",
        "--nu",
        "0.5",
        "--mu",
        "3",
        "--beta",
        "0.1",
        "-o",
        p(&path),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
}

#[test]
fn missing_input_is_invalid_input() {
    let out = wendmat(&["fit", "--data", "/nonexistent/data.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_beats_truth() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate_phi(dir.path(), "data.csv", 200, 3);
    let fitted = dir.path().join("fit.txt");
    let truth = dir.path().join("truth.txt");
    ok(&[
        "fit",
        "--data",
        p(&data),
        "--nu",
        "0",
        "--fix",
        "mu=2",
        "--fix",
        "nugget=0",
        "-o",
        p(&fitted),
    ]);
    ok(&[
        "fit",
        "--data",
        p(&data),
        "--nu",
        "0",
        "--fix",
        "sigma2=1",
        "--fix",
        "beta=0.15",
        "--fix",
        "mu=2",
        "--fix",
        "nugget=0",
        "-o",
        p(&truth),
    ]);
    let (f, t) = (key_values(&fitted), key_values(&truth));
    assert!(num(&f, "loglik") >= num(&t, "loglik"));
    assert_eq!(f["family"], "phi");
    assert!(f.contains_key("se_sigma2") && f.contains_key("se_beta"));
    assert!(!f.contains_key("se_mu_star"));
    assert_eq!(num(&f, "mu"), 2.0);
}

#[test]
fn predict_writes_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate_phi(dir.path(), "data.csv", 120, 4);
    let targets = simulate_phi(dir.path(), "targets.csv", 15, 5);
    let params = dir.path().join("params.txt");
    std::fs::write(
        &params,
        "family=phi\nnu=0\ndim=2\nsigma2=1\nbeta=0.15\nmu=2\nnugget=0\n",
    )
    .unwrap();
    let out = dir.path().join("pred.csv");
    let stdout = ok(&[
        "predict",
        "--train",
        p(&data),
        "--targets",
        p(&targets),
        "--params",
        p(&params),
        "-o",
        p(&out),
    ]);
    assert!(stdout.contains("crps"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l == "x,y,yhat,sd"));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn cv_phi_and_matern() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate_phi(dir.path(), "data.csv", 250, 11);
    let phi = dir.path().join("phi.txt");
    let matern = dir.path().join("matern.txt");
    ok(&[
        "fit",
        "--data",
        p(&data),
        "--family",
        "phi",
        "--nu",
        "0",
        "--fix",
        "mu=2",
        "--fix",
        "nugget=0",
        "-o",
        p(&phi),
    ]);
    ok(&[
        "fit",
        "--data",
        p(&data),
        "--family",
        "matern",
        "--nu",
        "0.5",
        "--fix",
        "nugget=0",
        "-o",
        p(&matern),
    ]);
    let cv_phi = dir.path().join("cv_phi.txt");
    let cv_matern = dir.path().join("cv_matern.txt");
    ok(&["cv", "--data", p(&data), "--params", p(&phi), "-o", p(&cv_phi)]);
    ok(&["cv", "--data", p(&data), "--params", p(&matern), "-o", p(&cv_matern)]);
    let (a, b) = (key_values(&cv_phi), key_values(&cv_matern));
    assert_eq!(a["storage"], "sparse");
    assert!(num(&a, "percent_zero") > 0.0);
    assert_eq!(b["storage"], "dense");
    for m in [&a, &b] {
        assert_eq!(num(m, "count"), 250.0);
        assert!(num(m, "crps") > 0.0 && num(m, "rmse") > 0.0);
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate_phi(dir.path(), "data.csv", 150, 21);
    // identical relative paths, so the headers match too
    let run = |threads: &str| {
        let work = dir.path().join(format!("threads{threads}"));
        std::fs::create_dir(&work).unwrap();
        std::fs::copy(&data, work.join("data.csv")).unwrap();
        let run_in = |args: &[&str]| {
            let out = Command::new(env!("CARGO_BIN_EXE_wendmat"))
                .args(["--threads", threads])
                .args(args)
                .current_dir(&work)
                .output()
                .unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        };
        run_in(&[
            "fit", "--data", "data.csv", "--nu", "0", "--fix", "nugget=0", "-o", "fit.txt",
        ]);
        run_in(&[
            "cv",
            "--data",
            "data.csv",
            "--params",
            "fit.txt",
            "--holdout",
            "0.3",
            "--repeats",
            "4",
            "-o",
            "cv.txt",
        ]);
        run_in(&[
            "study",
            "--nu",
            "0",
            "--mu",
            "4.5",
            "--n",
            "60",
            "--replicates",
            "4",
            "--fix",
            "mu",
            "-o",
            "study.csv",
        ]);
        ["fit.txt", "cv.txt", "study.csv"].map(|f| std::fs::read(work.join(f)).unwrap())
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn study_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.csv");
    let stdout = ok(&[
        "study",
        "--nu",
        "0",
        "--mu",
        "4.5",
        "--n",
        "80",
        "--replicates",
        "5",
        "--fix",
        "mu",
        "-o",
        p(&path),
    ]);
    assert!(stdout.contains("microergodic"));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text
        .lines()
        .any(|l| l == "replicate,parameter,standardized,microergodic_stat,status"));
    let rows = csv_rows(&path);
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r[4] == "ok"));
}
