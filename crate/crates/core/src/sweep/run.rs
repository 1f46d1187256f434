use super::config::{Family, StateAxis, SweepConfig};
use super::SweepError;
use crate::exec::Execution;
use crate::moments::{coefficients_a_g, critical_transmittance, ThresholdResult};
use crate::states::StateSpec;

/// One row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub family: Family,
    pub spec: StateSpec,
    /// Squeezing magnitude and relative phase for the squeezed family.
    pub r: Option<f64>,
    pub phi: Option<f64>,
    pub beta_sq: Option<f64>,
    pub strength: f64,
    pub n_th: f64,
    pub n_in: f64,
    pub q_in: f64,
    pub g: f64,
    pub threshold: ThresholdResult,
}

impl CurvePoint {
    pub fn tau_c(&self) -> Option<f64> {
        self.threshold.tau_c()
    }
}

#[derive(Debug, Clone, Copy)]
struct Task {
    family: Family,
    spec: StateSpec,
    r: Option<f64>,
    phi: Option<f64>,
    beta_sq: Option<f64>,
    strength: f64,
    n_th: f64,
}

impl Task {
    fn describe(&self) -> String {
        let mut s = format!("state={}", self.spec.family_name());
        if let StateSpec::Fock { n } = self.spec {
            s.push_str(&format!(" n={n}"));
        }
        if let Some(b) = self.beta_sq {
            s.push_str(&format!(" beta_sq={b}"));
        }
        s.push_str(&format!(" F={} n_th={}", self.strength, self.n_th));
        s
    }

    fn evaluate(&self, index: usize) -> Result<CurvePoint, SweepError> {
        let wrap = |source| SweepError::Point {
            index,
            description: self.describe(),
            source,
        };
        let m = self.spec.moments().map_err(wrap)?;
        let coeffs = coefficients_a_g(m, self.n_th, self.strength).map_err(wrap)?;
        let threshold = critical_transmittance(m, self.n_th, self.strength).map_err(wrap)?;
        Ok(CurvePoint {
            family: self.family,
            spec: self.spec,
            r: self.r,
            phi: self.phi,
            beta_sq: self.beta_sq,
            strength: self.strength,
            n_th: self.n_th,
            n_in: m.n_in(),
            q_in: m.q_in(),
            g: coeffs.g,
            threshold,
        })
    }
}

/// Grid points in output order: state parameters, then `F`, then `n_th`,
/// then `|beta|^2`.
fn tasks(cfg: &SweepConfig) -> Result<Vec<Task>, SweepError> {
    let resolved = cfg.resolve()?;
    let mut out = Vec::new();
    let mut push_family = |family: Family, make: &dyn Fn(f64) -> StateSpec, r, phi, grid: &[f64]| {
        for &strength in &resolved.f_list {
            for &n_th in &resolved.n_th_list {
                for &b in grid {
                    out.push(Task {
                        family,
                        spec: make(b),
                        r,
                        phi,
                        beta_sq: Some(b),
                        strength,
                        n_th,
                    });
                }
            }
        }
    };
    match &resolved.axis {
        StateAxis::Squeezed { r, phi, beta_sq } => {
            let (r, phi) = (*r, *phi);
            push_family(
                Family::Squeezed,
                &move |b| StateSpec::squeezed(r, phi, b),
                Some(r),
                Some(phi),
                beta_sq,
            );
        }
        StateAxis::Cat { beta_sq } => {
            push_family(Family::Cat, &StateSpec::odd_cat, None, None, beta_sq);
        }
        StateAxis::Fock(ns) => {
            for &n in ns {
                for &strength in &resolved.f_list {
                    for &n_th in &resolved.n_th_list {
                        out.push(Task {
                            family: Family::Fock,
                            spec: StateSpec::fock(n),
                            r: None,
                            phi: None,
                            beta_sq: None,
                            strength,
                            n_th,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Evaluates every grid point of `cfg` with the default execution strategy.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<CurvePoint>, SweepError> {
    run_sweep_with(cfg, Execution::default())
}

/// Same as [`run_sweep`]; the row order does not depend on `exec`.
pub fn run_sweep_with(cfg: &SweepConfig, exec: Execution) -> Result<Vec<CurvePoint>, SweepError> {
    let tasks = tasks(cfg)?;
    let indexed: Vec<(usize, Task)> = tasks.into_iter().enumerate().collect();
    exec.map(&indexed, |(i, t)| t.evaluate(*i))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    #[test]
    fn squeezed_single_row() {
        let cfg = SweepConfig::squeezed(0.4, FRAC_PI_2, vec![1.0], vec![0.0], vec![0.1]);
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let t = rows[0].tau_c().unwrap();
        assert!((t - 0.431_709_123_364_196_9).abs() < 1e-12);
    }

    #[test]
    fn cat_single_photon_limit() {
        let cfg = SweepConfig::cat(vec![0.0], vec![0.0], vec![0.1]);
        let rows = run_sweep(&cfg).unwrap();
        let t = rows[0].tau_c().unwrap();
        assert!((t - 0.1 / (0.1 + SQRT_2 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn pure_loss_gives_zero() {
        let cfg = SweepConfig::cat(vec![0.0, 0.5, 3.0], vec![0.0], vec![0.0]);
        for row in run_sweep(&cfg).unwrap() {
            assert_eq!(row.tau_c(), Some(0.0));
        }
        let cfg = SweepConfig::fock(vec![1, 2, 4], vec![0.0], vec![0.0]);
        for row in run_sweep(&cfg).unwrap() {
            assert_eq!(row.tau_c(), Some(0.0));
        }
    }

    #[test]
    fn ordering_is_f_then_nth_then_beta() {
        let cfg = SweepConfig::cat(vec![0.5, 1.0], vec![0.0, 0.3], vec![0.1, 0.5]);
        let rows = run_sweep(&cfg).unwrap();
        let keys: Vec<(f64, f64, f64)> = rows
            .iter()
            .map(|p| (p.strength, p.n_th, p.beta_sq.unwrap()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(keys, sorted);
        assert_eq!(rows.len(), 8);
    }

    #[test]
    fn below_beta_critical_is_no_threshold() {
        let cfg = SweepConfig::squeezed(0.4, FRAC_PI_2, vec![0.1, 0.3], vec![0.1], vec![0.1]);
        for row in run_sweep(&cfg).unwrap() {
            assert_eq!(row.threshold, ThresholdResult::NoThreshold);
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let grid: Vec<f64> = (0..200).map(|i| 0.41 + i as f64 * 0.05).collect();
        let cfg = SweepConfig::squeezed(0.4, FRAC_PI_2, grid, vec![0.0, 0.5], vec![0.1, 0.3]);
        let a = run_sweep_with(&cfg, Execution::Sequential).unwrap();
        let b = run_sweep_with(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
