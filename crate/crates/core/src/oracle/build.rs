use nalgebra::DVector;
use num_complex::Complex64;

use super::state::TruncatedState;
use super::OracleError;
use crate::states::StateSpec;

/// Smallest truncation accepted by the builders.
pub const MIN_DIM: usize = 2;

/// Largest norm of a single scaled step in [`expm_apply`].
const STEP_NORM: f64 = 0.5;

/// Action of a sparse generator on a vector of Fock amplitudes.
trait Generator {
    fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64>;
    /// Upper bound on the operator norm on a space of dimension `dim`.
    fn norm_bound(&self, dim: usize) -> f64;
}

/// `(xi a^dagger^2 - xi* a^2) / 2`.
struct Squeeze {
    xi: Complex64,
}

impl Generator for Squeeze {
    fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let n = v.len();
        DVector::from_fn(n, |k, _| {
            let mut acc = Complex64::new(0.0, 0.0);
            if k >= 2 {
                acc += self.xi * (((k * (k - 1)) as f64).sqrt() * 0.5) * v[k - 2];
            }
            if k + 2 < n {
                acc -= self.xi.conj() * ((((k + 1) * (k + 2)) as f64).sqrt() * 0.5) * v[k + 2];
            }
            acc
        })
    }

    fn norm_bound(&self, dim: usize) -> f64 {
        self.xi.norm() * dim as f64
    }
}

/// `beta a^dagger - beta* a`.
struct Displace {
    beta: Complex64,
}

impl Generator for Displace {
    fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let n = v.len();
        DVector::from_fn(n, |k, _| {
            let mut acc = Complex64::new(0.0, 0.0);
            if k >= 1 {
                acc += self.beta * (k as f64).sqrt() * v[k - 1];
            }
            if k + 1 < n {
                acc -= self.beta.conj() * ((k + 1) as f64).sqrt() * v[k + 1];
            }
            acc
        })
    }

    fn norm_bound(&self, dim: usize) -> f64 {
        2.0 * self.beta.norm() * (dim as f64).sqrt()
    }
}

/// `exp(G) v` by scaling into steps of norm at most `STEP_NORM` and summing
/// the Taylor series of each step to machine precision.
fn expm_apply(g: &impl Generator, v: DVector<Complex64>) -> DVector<Complex64> {
    let dim = v.len();
    let steps = (g.norm_bound(dim) / STEP_NORM).ceil().max(1.0) as usize;
    let scale = 1.0 / steps as f64;
    let mut out = v;
    for _ in 0..steps {
        let mut term = out.clone();
        let mut sum = out.clone();
        for order in 1..60 {
            term = g.apply(&term) * Complex64::new(scale / order as f64, 0.0);
            sum += &term;
            if term.norm() <= 1e-18 * sum.norm() {
                break;
            }
        }
        out = sum;
    }
    out
}

fn working_dim(dim: usize) -> usize {
    2 * dim + 32
}

/// Probability mass of `v` on levels `>= dim`, and an estimate of the cut
/// needed for the first two moments: the smallest one whose moment-weighted
/// tail `sum (k + 1)^2 p_k` is below `tol`.
fn tail_of(v: &DVector<Complex64>, dim: usize, tol: f64) -> (f64, usize) {
    let probs: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
    let mut weighted = 0.0;
    let mut required = probs.len() + 1;
    for k in (0..probs.len()).rev() {
        weighted += ((k + 1) * (k + 1)) as f64 * probs[k];
        if weighted >= tol {
            required = k + 1;
            break;
        }
        required = k;
    }
    let mass = probs.iter().skip(dim).sum();
    (mass, required.max(MIN_DIM))
}

fn truncate_pure(
    full: DVector<Complex64>,
    dim: usize,
    tol: f64,
    what: &'static str,
) -> Result<TruncatedState, OracleError> {
    let (tail_mass, required_dim) = tail_of(&full, dim, tol);
    if tail_mass >= tol {
        return Err(OracleError::Truncation {
            what,
            dim,
            tail_mass,
            required_dim: required_dim.max(dim + 1),
        });
    }
    let mut v = full.rows(0, dim).into_owned();
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    Ok(TruncatedState::from_pure(v, tail_mass))
}

/// Coefficients of the odd cat `(|beta> - |-beta>) / sqrt(2 (1 - e^{-2|beta|^2}))`
/// on levels `0..len`, built from the two coherent-state vectors.
fn odd_cat_vector(beta_abs: f64, len: usize) -> DVector<Complex64> {
    let b2 = beta_abs * beta_abs;
    let norm = (2.0 * -(-2.0 * b2).exp_m1()).sqrt();
    let ln_beta = beta_abs.ln();
    let mut ln_fact = 0.0;
    DVector::from_fn(len, |k, _| {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        // e^{-|b|^2/2} b^k / sqrt(k!) for +b and -b.
        let ln_mag = -0.5 * b2 + k as f64 * ln_beta - 0.5 * ln_fact;
        let plus = ln_mag.exp();
        let minus = if k % 2 == 0 { plus } else { -plus };
        Complex64::new((plus - minus) / norm, 0.0)
    })
}

/// Pure state of `spec` on `dim` Fock levels.
///
/// Squeezed states are generated in a larger working space and cut back to
/// `dim`; the discarded population is reported as the trace deficit and must
/// stay below `tail_tolerance`.
pub fn build_state(
    spec: &StateSpec,
    dim: usize,
    tail_tolerance: f64,
) -> Result<TruncatedState, OracleError> {
    if dim < MIN_DIM {
        return Err(OracleError::Domain {
            name: "dim",
            value: dim as f64,
            reason: "at least two Fock levels are required",
        });
    }
    spec.validate()?;
    match *spec {
        StateSpec::Fock { n } => TruncatedState::fock(n as usize, dim),
        StateSpec::OddCat { beta_abs: 0.0 } => TruncatedState::fock(1, dim),
        StateSpec::OddCat { beta_abs } => {
            let full = odd_cat_vector(beta_abs, working_dim(dim));
            truncate_pure(full, dim, tail_tolerance, "odd cat state")
        }
        StateSpec::SqueezedDisplaced {
            r,
            psi,
            beta_abs,
            theta,
        } => {
            let m = working_dim(dim);
            let mut vacuum = DVector::zeros(m);
            vacuum[0] = Complex64::new(1.0, 0.0);
            let squeezed = expm_apply(
                &Squeeze {
                    xi: Complex64::from_polar(r, psi),
                },
                vacuum,
            );
            let displaced = expm_apply(
                &Displace {
                    beta: Complex64::from_polar(beta_abs, theta),
                },
                squeezed,
            );
            truncate_pure(displaced, dim, tail_tolerance, "displaced squeezed state")
        }
    }
}

/// Thermal state with mean occupancy `n_th`, renormalized on `dim` levels.
pub fn build_thermal(n_th: f64, dim: usize, tail_tolerance: f64) -> Result<TruncatedState, OracleError> {
    if !(n_th.is_finite() && n_th >= 0.0) {
        return Err(OracleError::Domain {
            name: "n_th",
            value: n_th,
            reason: "thermal occupancy must be finite and >= 0",
        });
    }
    if dim < MIN_DIM {
        return Err(OracleError::Domain {
            name: "dim",
            value: dim as f64,
            reason: "at least two Fock levels are required",
        });
    }
    if n_th == 0.0 {
        let mut p = vec![0.0; dim];
        p[0] = 1.0;
        return Ok(TruncatedState::from_diagonal(&p, 0.0));
    }
    let ratio = n_th / (n_th + 1.0);
    let tail_mass = ratio.powi(dim as i32);
    if tail_mass >= tail_tolerance {
        let required_dim = (dim..)
            .find(|&n| thermal_tail_weight(ratio, n) < tail_tolerance)
            .unwrap_or(dim);
        return Err(OracleError::Truncation {
            what: "thermal state",
            dim,
            tail_mass,
            required_dim,
        });
    }
    let kept = 1.0 - tail_mass;
    let p: Vec<f64> = (0..dim)
        .map(|k| (1.0 - ratio) * ratio.powi(k as i32) / kept)
        .collect();
    Ok(TruncatedState::from_diagonal(&p, tail_mass))
}

/// `sum_{k >= dim} (k + 1)^2 (1 - x) x^k` for the geometric distribution.
fn thermal_tail_weight(x: f64, dim: usize) -> f64 {
    let mut total = 0.0;
    let mut term_p = (1.0 - x) * x.powi(dim as i32);
    let mut k = dim;
    while term_p > 0.0 {
        let term = ((k + 1) * (k + 1)) as f64 * term_p;
        total += term;
        if term < total * 1e-18 {
            break;
        }
        term_p *= x;
        k += 1;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::state::{factorial_moment, measure_moments};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn fock_and_cat_limit() {
        let f = build_state(&StateSpec::fock(1), 10, 1e-12).unwrap();
        let c = build_state(&StateSpec::odd_cat(0.0), 10, 1e-12).unwrap();
        assert_eq!(f.matrix(), c.matrix());
        assert_eq!(f.matrix()[(1, 1)], Complex64::new(1.0, 0.0));
        assert!(build_state(&StateSpec::fock(1), 1, 1e-12).is_err());
    }

    #[test]
    fn small_cat_is_close_to_single_photon() {
        let c = build_state(&StateSpec::odd_cat(1e-12), 10, 1e-12).unwrap();
        let r = measure_moments(&c);
        assert!((r.n_mean - 1.0).abs() < 1e-10);
    }

    #[test]
    fn thermal_examples() {
        let vac = build_thermal(0.0, 7, 1e-12).unwrap();
        assert_eq!(vac.probabilities()[0], 1.0);

        let t = build_thermal(0.5, 60, 1e-12).unwrap();
        let p = t.probabilities();
        assert!((p[1] / p[0] - 1.0 / 3.0).abs() < 1e-15);
        let r = measure_moments(&t);
        assert!((r.n_mean - 0.5).abs() < 1e-10);
        assert!((r.q_param - 0.25).abs() < 1e-10);

        let t = build_thermal(1.0, 80, 1e-12).unwrap();
        assert!((measure_moments(&t).n_mean - 1.0).abs() < 1e-10);
        assert!((factorial_moment(&t, 2) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn thermal_truncation_error_reports_required_dim() {
        match build_thermal(1.0, 20, 1e-12) {
            Err(OracleError::Truncation { required_dim, .. }) => {
                assert!(0.5_f64.powi(required_dim as i32) < 1e-12);
                assert!(build_thermal(1.0, required_dim, 1e-12).is_ok());
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn squeezed_state_is_normalized_and_pure() {
        let s = build_state(&StateSpec::squeezed(0.4, FRAC_PI_2, 1.0), 40, 1e-12).unwrap();
        s.check_physical(1e-12).unwrap();
        assert!(s.trace_deficit() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_distribution() {
        // S(xi)|0> has p_0 = 1/cosh r and p_2 = tanh^2 r / (2 cosh r).
        let r = 0.7_f64;
        let s = build_state(&StateSpec::squeezed(r, 0.0, 0.0), 80, 1e-12).unwrap();
        let p = s.probabilities();
        assert!((p[0] - 1.0 / r.cosh()).abs() < 1e-13);
        assert!((p[2] - r.tanh().powi(2) / (2.0 * r.cosh())).abs() < 1e-13);
        assert!(p[1].abs() < 1e-26);
    }

    #[test]
    fn coherent_state_is_poisson() {
        let b2 = 2.5_f64;
        let s = build_state(&StateSpec::squeezed(0.0, 0.3, b2), 48, 1e-12).unwrap();
        let p = s.probabilities();
        let mut poisson = (-b2).exp();
        for (k, pk) in p.iter().enumerate().take(12) {
            if k > 0 {
                poisson *= b2 / k as f64;
            }
            assert!((pk - poisson).abs() < 1e-13, "level {k}");
        }
    }

    #[test]
    fn squeezed_truncation_error() {
        let err = build_state(&StateSpec::squeezed(0.4, FRAC_PI_2, 9.0), 12, 1e-12).unwrap_err();
        match err {
            OracleError::Truncation { required_dim, .. } => assert!(required_dim > 12),
            other => panic!("unexpected {other:?}"),
        }
    }
}
