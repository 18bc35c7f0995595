//! `key=value` parameter files, as written by `fit` and read by `predict`
//! and `cv`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use wendmat::inference::{FitFamily, ParamVector};

use crate::CliError;

/// Full-precision float formatting (17 significant digits).
pub fn full(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub family: FitFamily,
    pub dim: usize,
    pub theta: ParamVector,
}

pub fn family_name(f: FitFamily) -> &'static str {
    match f {
        FitFamily::Matern { .. } => "matern",
        FitFamily::Phi { .. } => "phi",
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("line {}: expected key=value, found '{line}'", k + 1)))?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn number(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>, CliError> {
    map.get(key)
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| CliError::Usage(format!("parameter file: {key}='{s}': {e}")))
        })
        .transpose()
}

fn required(map: &BTreeMap<String, String>, key: &str) -> Result<f64, CliError> {
    number(map, key)?.ok_or_else(|| CliError::Usage(format!("parameter file: missing '{key}'")))
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let map = parse_pairs(text)?;
        let nu = required(&map, "nu")?;
        let family = match map.get("family").map(String::as_str) {
            Some("phi") => FitFamily::Phi { nu },
            Some("matern") => FitFamily::Matern { nu },
            Some(other) => return Err(CliError::Usage(format!("parameter file: unknown family '{other}'"))),
            None => return Err(CliError::Usage("parameter file: missing 'family'".into())),
        };
        let dim = match number(&map, "dim")? {
            Some(d) if d.fract() == 0.0 && (1.0..=3.0).contains(&d) => d as usize,
            Some(d) => return Err(CliError::Usage(format!("parameter file: dim = {d} must be 1, 2 or 3"))),
            None => 2,
        };
        let mu_star = match family {
            FitFamily::Phi { .. } => Some(1.0 / required(&map, "mu")?),
            FitFamily::Matern { .. } => None,
        };
        let theta = ParamVector {
            sigma2: required(&map, "sigma2")?,
            beta: required(&map, "beta")?,
            mu_star,
            nugget: number(&map, "nugget")?.unwrap_or(0.0),
        };
        theta.validate(family, dim)?;
        Ok(ModelFile { family, dim, theta })
    }

    /// The model lines of a parameter file.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "family={}", family_name(self.family));
        let _ = writeln!(s, "nu={}", full(self.family.nu()));
        let _ = writeln!(s, "dim={}", self.dim);
        let _ = writeln!(s, "sigma2={}", full(self.theta.sigma2));
        let _ = writeln!(s, "beta={}", full(self.theta.beta));
        if let Some(mu) = self.theta.mu(self.family, self.dim) {
            let _ = writeln!(s, "mu={}", full(mu));
        }
        let _ = writeln!(s, "nugget={}", full(self.theta.nugget));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = ModelFile {
            family: FitFamily::Phi { nu: 1.0 },
            dim: 2,
            theta: ParamVector {
                sigma2: 1.234_567_890_123_456_7,
                beta: 0.1 / 3.0,
                mu_star: Some(1.0 / 4.5),
                nugget: 0.0,
            },
        };
        let back = ModelFile::parse(&format!("# header\n{}loglik=-3\n", m.render())).unwrap();
        assert_eq!(back.family, m.family);
        assert_eq!(back.theta.sigma2, m.theta.sigma2);
        assert_eq!(back.theta.beta, m.theta.beta);
        assert!((back.theta.mu_star.unwrap() - m.theta.mu_star.unwrap()).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ModelFile::parse("family=phi\nnu=0\nsigma2=1\nbeta=0.1\n").is_err());
        assert!(ModelFile::parse("family=phi\nnu=0\nsigma2=1\nbeta=0.1\nmu=1.2\n").is_err());
        assert!(ModelFile::parse("family=cauchy\nnu=0\nsigma2=1\nbeta=0.1\n").is_err());
        assert!(ModelFile::parse("nu 0\n").is_err());
        assert!(ModelFile::parse("family=matern\nnu=0.5\nsigma2=1\nbeta=0.1\n").is_ok());
    }
}
