use std::fmt;

use super::config::SweepConfig;
use super::run::CurvePoint;
use crate::exec::Execution;
use crate::moments::{q_out, FluctuationModel};
use crate::oracle::{Oracle, OracleConfig};

/// Oracle check of one grid point at one averaged transmittance.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCheck {
    pub index: usize,
    pub tau_bar: f64,
    pub closed_form: f64,
    /// Oracle q-parameter, or the reason the oracle could not run.
    pub oracle: Result<f64, String>,
}

impl PointCheck {
    pub fn deviation(&self) -> Option<f64> {
        self.oracle.as_ref().ok().map(|q| (q - self.closed_form).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub tolerance: f64,
    pub checks: Vec<PointCheck>,
}

impl VerificationReport {
    pub fn worst_deviation(&self) -> f64 {
        self.checks
            .iter()
            .filter_map(PointCheck::deviation)
            .fold(0.0, f64::max)
    }

    pub fn failures(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.deviation().is_none_or(|d| d > self.tolerance))
            .count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.oracle {
                Ok(q) => writeln!(
                    f,
                    "point {:>5} tau_bar={:<10.6} closed={:+.12e} oracle={:+.12e} dev={:.2e}",
                    c.index,
                    c.tau_bar,
                    c.closed_form,
                    q,
                    (q - c.closed_form).abs()
                )?,
                Err(e) => writeln!(f, "point {:>5} tau_bar={:<10.6} oracle failed: {e}", c.index, c.tau_bar)?,
            }
        }
        write!(
            f,
            "verified {} checks: {} failures, worst deviation {:.3e} (tolerance {:.1e})",
            self.checks.len(),
            self.failures(),
            self.worst_deviation(),
            self.tolerance
        )
    }
}

/// Evenly spaced indices covering both ends of `0..len`.
fn sample_indices(len: usize, count: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let count = count.min(len);
    if count == 1 {
        return vec![0];
    }
    let mut v: Vec<usize> = (0..count)
        .map(|i| i * (len - 1) / (count - 1))
        .collect();
    v.dedup();
    v
}

/// Compares the oracle with the closed-form fluctuating-channel q-parameter
/// on a subsample of `points`, at `tau_bar = 0.5` and at the threshold.
pub fn verify_mode(cfg: &SweepConfig, points: &[CurvePoint], exec: Execution) -> VerificationReport {
    let oracle = Oracle::new(OracleConfig {
        tail_tolerance: cfg.tail_tolerance,
        max_dim: cfg.truncation,
        ..OracleConfig::default()
    });
    let mut jobs = Vec::new();
    for i in sample_indices(points.len(), cfg.verify_samples) {
        jobs.push((i, 0.5));
        if let Some(t) = points[i].tau_c() {
            if t > 0.0 && t < 1.0 {
                jobs.push((i, t));
            }
        }
    }
    let checks = exec.map(&jobs, |&(index, tau_bar)| {
        let p = &points[index];
        let closed_form = p
            .spec
            .moments()
            .and_then(|m| {
                let model = FluctuationModel::new(tau_bar, p.strength)?;
                q_out(m, model, p.n_th)
            })
            .unwrap_or(f64::NAN);
        let oracle = oracle
            .fluctuating_q(&p.spec, p.n_th, tau_bar, p.strength)
            .map(|r| r.q_out)
            .map_err(|e| e.to_string());
        PointCheck {
            index,
            tau_bar,
            closed_form,
            oracle,
        }
    });
    VerificationReport {
        tolerance: cfg.verify_tolerance,
        checks,
    }
}
