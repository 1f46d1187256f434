use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SweepError;
use crate::moments::thermal_occupancy;
use crate::oracle::{DEFAULT_MAX_DIM, DEFAULT_TAIL_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Squeezed,
    Cat,
    Fock,
}

impl FromStr for Family {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "squeezed" | "sq" => Ok(Family::Squeezed),
            "cat" | "odd_cat" | "odd-cat" => Ok(Family::Cat),
            "fock" => Ok(Family::Fock),
            other => Err(SweepError::config(
                "state",
                format!("unknown state family `{other}` (expected squeezed, cat or fock)"),
            )),
        }
    }
}

/// A list of values or a range: `"a,b,c"`, `"start:stop:count"` (linear,
/// inclusive) or `"log:start:stop:count"` (geometric, inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Text(String),
}

impl GridSpec {
    pub fn values(&self, field: &str) -> Result<Vec<f64>, SweepError> {
        match self {
            GridSpec::List(v) => Ok(v.clone()),
            GridSpec::Text(s) => parse_grid(s).map_err(|m| SweepError::config(field, m)),
        }
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("`{}` is not a number", s.trim()))
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if !s.contains(':') {
        return s.split(',').map(parse_number).collect();
    }
    let parts: Vec<&str> = s.split(':').collect();
    let (log, rest) = match parts.as_slice() {
        ["log", rest @ ..] => (true, rest),
        rest => (false, rest),
    };
    let [start, stop, count] = rest else {
        return Err(format!("range `{s}` must be start:stop:count or log:start:stop:count"));
    };
    let (start, stop) = (parse_number(start)?, parse_number(stop)?);
    let count: usize = count
        .trim()
        .parse()
        .map_err(|_| format!("`{count}` is not a point count"))?;
    if count == 0 {
        return Err("a range needs at least one point".into());
    }
    if log && (start <= 0.0 || stop <= 0.0) {
        return Err("log ranges need positive endpoints".into());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            let u = i as f64 / last;
            if i + 1 == count {
                stop
            } else if log {
                (start.ln() + u * (stop.ln() - start.ln())).exp()
            } else {
                start + u * (stop - start)
            }
        })
        .collect())
}

fn default_verify_samples() -> usize {
    8
}

fn default_verify_tolerance() -> f64 {
    1e-8
}

fn default_tail_tolerance() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

fn default_truncation() -> usize {
    DEFAULT_MAX_DIM
}

/// Sweep description; the config-file keys are the field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub state: Option<Family>,
    /// Squeezing magnitude (squeezed family).
    pub r: Option<f64>,
    /// Relative phase `theta - psi/2` (squeezed family).
    pub phi: Option<f64>,
    /// Displacement phase; with `psi`, an alternative to `phi`.
    pub theta: Option<f64>,
    /// Squeezing phase.
    pub psi: Option<f64>,
    /// `|beta|^2` grid (squeezed and cat families).
    pub beta_sq: Option<GridSpec>,
    /// Photon numbers (Fock family).
    #[serde(default)]
    pub fock_n: Vec<u32>,
    #[serde(default)]
    pub f_list: Vec<f64>,
    #[serde(default)]
    pub n_th_list: Vec<f64>,
    /// Values of `hbar omega / (k_B T)`, converted to occupancies and appended to `n_th_list`.
    #[serde(default)]
    pub hbar_omega_over_kt: Vec<f64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub verify: bool,
    #[serde(default = "default_verify_samples")]
    pub verify_samples: usize,
    #[serde(default = "default_verify_tolerance")]
    pub verify_tolerance: f64,
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
    /// Largest Fock truncation the oracle may use.
    #[serde(default = "default_truncation")]
    pub truncation: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            state: None,
            r: None,
            phi: None,
            theta: None,
            psi: None,
            beta_sq: None,
            fock_n: Vec::new(),
            f_list: Vec::new(),
            n_th_list: Vec::new(),
            hbar_omega_over_kt: Vec::new(),
            out: None,
            verify: false,
            verify_samples: default_verify_samples(),
            verify_tolerance: default_verify_tolerance(),
            tail_tolerance: default_tail_tolerance(),
            truncation: default_truncation(),
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, SweepError> {
        toml::from_str(text).map_err(|e| SweepError::config("config", e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, SweepError> {
        let text = fs::read_to_string(path)
            .map_err(|e| SweepError::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn squeezed(r: f64, phi: f64, beta_sq: Vec<f64>, f_list: Vec<f64>, n_th_list: Vec<f64>) -> Self {
        Self {
            state: Some(Family::Squeezed),
            r: Some(r),
            phi: Some(phi),
            beta_sq: Some(GridSpec::List(beta_sq)),
            f_list,
            n_th_list,
            ..Self::default()
        }
    }

    pub fn cat(beta_sq: Vec<f64>, f_list: Vec<f64>, n_th_list: Vec<f64>) -> Self {
        Self {
            state: Some(Family::Cat),
            beta_sq: Some(GridSpec::List(beta_sq)),
            f_list,
            n_th_list,
            ..Self::default()
        }
    }

    pub fn fock(fock_n: Vec<u32>, f_list: Vec<f64>, n_th_list: Vec<f64>) -> Self {
        Self {
            state: Some(Family::Fock),
            fock_n,
            f_list,
            n_th_list,
            ..Self::default()
        }
    }

    /// Checks the configuration and expands all grids.
    pub fn resolve(&self) -> Result<ResolvedSweep, SweepError> {
        let family = self
            .state
            .ok_or_else(|| SweepError::config("state", "missing state family"))?;

        let f_list = self.f_list.clone();
        if f_list.is_empty() {
            return Err(SweepError::config("f_list", "grid is empty"));
        }
        for (i, &f) in f_list.iter().enumerate() {
            if !(0.0..=1.0).contains(&f) {
                return Err(SweepError::config(format!("f_list[{i}]"), format!("{f} is outside [0, 1]")));
            }
        }

        let mut n_th_list = self.n_th_list.clone();
        for (i, &x) in self.hbar_omega_over_kt.iter().enumerate() {
            let n = thermal_occupancy(x)
                .map_err(|e| SweepError::config(format!("hbar_omega_over_kt[{i}]"), e.to_string()))?;
            n_th_list.push(n);
        }
        if n_th_list.is_empty() {
            return Err(SweepError::config("n_th_list", "grid is empty"));
        }
        for (i, &n) in n_th_list.iter().enumerate() {
            if !(n.is_finite() && n >= 0.0) {
                return Err(SweepError::config(format!("n_th_list[{i}]"), format!("{n} must be finite and >= 0")));
            }
        }

        let axis = match family {
            Family::Fock => {
                if self.fock_n.is_empty() {
                    return Err(SweepError::config("fock_n", "grid is empty"));
                }
                StateAxis::Fock(self.fock_n.clone())
            }
            Family::Squeezed | Family::Cat => {
                let beta_sq = self
                    .beta_sq
                    .as_ref()
                    .ok_or_else(|| SweepError::config("beta_sq", "missing grid"))?
                    .values("beta_sq")?;
                if beta_sq.is_empty() {
                    return Err(SweepError::config("beta_sq", "grid is empty"));
                }
                for (i, &b) in beta_sq.iter().enumerate() {
                    if !(b.is_finite() && b >= 0.0) {
                        return Err(SweepError::config(format!("beta_sq[{i}]"), format!("{b} must be finite and >= 0")));
                    }
                }
                if family == Family::Cat {
                    StateAxis::Cat { beta_sq }
                } else {
                    let r = self
                        .r
                        .ok_or_else(|| SweepError::config("r", "squeezed sweeps need r"))?;
                    if !(r.is_finite() && r >= 0.0) {
                        return Err(SweepError::config("r", format!("{r} must be finite and >= 0")));
                    }
                    let phi = match (self.phi, self.theta, self.psi) {
                        (Some(phi), None, None) => phi,
                        (None, Some(theta), Some(psi)) => theta - 0.5 * psi,
                        (None, Some(theta), None) => theta,
                        (None, None, _) => {
                            return Err(SweepError::config("phi", "squeezed sweeps need phi (or theta and psi)"))
                        }
                        _ => {
                            return Err(SweepError::config("phi", "give either phi or theta/psi, not both"))
                        }
                    };
                    if !phi.is_finite() {
                        return Err(SweepError::config("phi", "must be finite"));
                    }
                    StateAxis::Squeezed { r, phi, beta_sq }
                }
            }
        };

        if self.verify {
            if self.verify_samples == 0 {
                return Err(SweepError::config("verify_samples", "must be positive"));
            }
            if self.verify_tolerance.is_nan() || self.verify_tolerance <= 0.0 {
                return Err(SweepError::config("verify_tolerance", "must be positive"));
            }
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0) {
            return Err(SweepError::config("tail_tolerance", "must lie in (0, 1)"));
        }
        if self.truncation < 4 {
            return Err(SweepError::config("truncation", "must be at least 4"));
        }

        Ok(ResolvedSweep {
            axis,
            f_list,
            n_th_list,
        })
    }
}

/// State parameters of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum StateAxis {
    Squeezed { r: f64, phi: f64, beta_sq: Vec<f64> },
    Cat { beta_sq: Vec<f64> },
    Fock(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSweep {
    pub axis: StateAxis,
    pub f_list: Vec<f64>,
    pub n_th_list: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_grid("1, 2.5,3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(parse_grid("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = parse_grid("log:0.1:1000:5").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[1] - 1.0).abs() < 1e-12 && g[4] == 1000.0);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("log:0:1:3").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            state = "squeezed"
            r = 0.4
            phi = 1.5707963267948966
            beta_sq = "0.5:2:4"
            f_list = [0.0, 0.1]
            n_th_list = [0.1]
            hbar_omega_over_kt = [0.6931471805599453]
        "#;
        let cfg = SweepConfig::from_toml(text).unwrap();
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.n_th_list.len(), 2);
        assert!((resolved.n_th_list[1] - 1.0).abs() < 1e-12);
        match resolved.axis {
            StateAxis::Squeezed { beta_sq, .. } => assert_eq!(beta_sq, vec![0.5, 1.0, 1.5, 2.0]),
            other => panic!("{other:?}"),
        }
        let back = SweepConfig::from_toml(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_errors_name_the_field() {
        let err = SweepConfig::from_toml("state = \"cat\"\nf_list=[0.0]\nn_th_list=[0.1]")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert_eq!(err.field(), Some("beta_sq"));

        let mut cfg = SweepConfig::cat(vec![1.0], vec![0.0, 1.5], vec![0.1]);
        assert_eq!(cfg.resolve().unwrap_err().field(), Some("f_list[1]"));
        cfg.f_list = vec![0.2];
        cfg.n_th_list = vec![];
        assert_eq!(cfg.resolve().unwrap_err().field(), Some("n_th_list"));

        assert!(SweepConfig::from_toml("bogus = 1").is_err());
        let sq = SweepConfig {
            phi: None,
            ..SweepConfig::squeezed(0.4, 0.0, vec![1.0], vec![0.0], vec![0.0])
        };
        assert_eq!(sq.resolve().unwrap_err().field(), Some("phi"));
    }

    #[test]
    fn theta_psi_alternative() {
        let cfg = SweepConfig {
            phi: None,
            theta: Some(2.0),
            psi: Some(1.0),
            ..SweepConfig::squeezed(0.4, 0.0, vec![1.0], vec![0.0], vec![0.0])
        };
        match cfg.resolve().unwrap().axis {
            StateAxis::Squeezed { phi, .. } => assert_eq!(phi, 1.5),
            other => panic!("{other:?}"),
        }
    }
}
