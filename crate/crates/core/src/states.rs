//! Input-state families and their closed-form photon-number moments.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::moments::{InputMoments, MomentsError};

/// Description of a pure input state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StateSpec {
    /// `D(beta) S(xi) |0>` with `xi = r e^{i psi}` and `beta = beta_abs e^{i theta}`.
    SqueezedDisplaced {
        r: f64,
        psi: f64,
        beta_abs: f64,
        theta: f64,
    },
    /// Normalized `|beta> - |-beta>`.
    OddCat { beta_abs: f64 },
    Fock { n: u32 },
}

impl StateSpec {
    /// Squeezed state parameterized by the relative phase `phi = theta - psi/2`
    /// and `|beta|^2`; the squeezing phase is taken to be zero.
    pub fn squeezed(r: f64, phi: f64, beta_sq: f64) -> Self {
        StateSpec::SqueezedDisplaced {
            r,
            psi: 0.0,
            beta_abs: beta_sq.max(0.0).sqrt(),
            theta: phi,
        }
        .canonical()
    }

    pub fn odd_cat(beta_sq: f64) -> Self {
        StateSpec::OddCat {
            beta_abs: beta_sq.max(0.0).sqrt(),
        }
    }

    pub fn fock(n: u32) -> Self {
        StateSpec::Fock { n }
    }

    /// Phases reduced to `[0, 2 pi)`.
    pub fn canonical(self) -> Self {
        match self {
            StateSpec::SqueezedDisplaced {
                r,
                psi,
                beta_abs,
                theta,
            } => StateSpec::SqueezedDisplaced {
                r,
                psi: psi.rem_euclid(TAU),
                beta_abs,
                theta: theta.rem_euclid(TAU),
            },
            other => other,
        }
    }

    /// `theta - psi/2` for squeezed states; `None` otherwise.
    pub fn relative_phase(&self) -> Option<f64> {
        match *self {
            StateSpec::SqueezedDisplaced { psi, theta, .. } => Some(theta - 0.5 * psi),
            _ => None,
        }
    }

    /// `|beta|^2` for the displaced families.
    pub fn beta_sq(&self) -> Option<f64> {
        match *self {
            StateSpec::SqueezedDisplaced { beta_abs, .. } | StateSpec::OddCat { beta_abs } => {
                Some(beta_abs * beta_abs)
            }
            StateSpec::Fock { .. } => None,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            StateSpec::SqueezedDisplaced { .. } => "squeezed",
            StateSpec::OddCat { .. } => "cat",
            StateSpec::Fock { .. } => "fock",
        }
    }

    pub fn validate(&self) -> Result<(), MomentsError> {
        let bad = |name, value| MomentsError::Domain {
            name,
            value,
            reason: "must be finite and >= 0",
        };
        match *self {
            StateSpec::SqueezedDisplaced {
                r,
                psi,
                beta_abs,
                theta,
            } => {
                if !(r.is_finite() && r >= 0.0) {
                    return Err(bad("r", r));
                }
                if !(beta_abs.is_finite() && beta_abs >= 0.0) {
                    return Err(bad("beta_abs", beta_abs));
                }
                if !psi.is_finite() || !theta.is_finite() {
                    return Err(MomentsError::Domain {
                        name: "phase",
                        value: if psi.is_finite() { theta } else { psi },
                        reason: "phases must be finite",
                    });
                }
            }
            StateSpec::OddCat { beta_abs } => {
                if !(beta_abs.is_finite() && beta_abs >= 0.0) {
                    return Err(bad("beta_abs", beta_abs));
                }
            }
            StateSpec::Fock { .. } => {}
        }
        Ok(())
    }

    pub fn moments(&self) -> Result<InputMoments, MomentsError> {
        self.validate()?;
        match *self {
            StateSpec::SqueezedDisplaced { r, beta_abs, .. } => {
                let phi = self.relative_phase().unwrap_or(0.0);
                squeezed_moments(r, phi, beta_abs * beta_abs)
            }
            StateSpec::OddCat { beta_abs } => cat_moments(beta_abs * beta_abs),
            StateSpec::Fock { n } => fock_moments(n),
        }
    }
}

/// Coefficient of `|beta|^2` in the squeezed-state q-parameter,
/// `2 sinh^2 r + sinh 2r cos 2 phi`.
pub fn squeezed_q2(r: f64, phi: f64) -> f64 {
    2.0 * r.sinh().powi(2) + (2.0 * r).sinh() * (2.0 * phi).cos()
}

pub fn squeezed_moments(r: f64, phi: f64, beta_sq: f64) -> Result<InputMoments, MomentsError> {
    let sh2 = r.sinh().powi(2);
    let n_in = beta_sq + sh2;
    let q_in = squeezed_q2(r, phi) * beta_sq + sh2 * (2.0 * r).cosh();
    InputMoments::new(n_in, q_in)
}

// sin^2 phi - e^{2r} cos^2 phi > 0 is |tan phi| > e^r without evaluating the tangent.
fn squeezed_denominator(r: f64, phi: f64) -> f64 {
    phi.sin().powi(2) - (2.0 * r).exp() * phi.cos().powi(2)
}

/// Whether a large enough displacement makes the squeezed state sub-Poissonian.
///
/// Without squeezing (`r = 0`) the state is coherent and never sub-Poissonian.
pub fn squeezed_sub_poisson_condition(r: f64, phi: f64) -> bool {
    r > 0.0 && squeezed_denominator(r, phi) > 0.0
}

/// `|beta|^2` above which the squeezed state is sub-Poissonian.
pub fn squeezed_beta_critical_sq(r: f64, phi: f64) -> Result<f64, MomentsError> {
    if !squeezed_sub_poisson_condition(r, phi) {
        return Err(MomentsError::Domain {
            name: "phi",
            value: phi,
            reason: "|tan phi| > e^r is required for a sub-Poissonian squeezed state",
        });
    }
    Ok(r.exp() * r.sinh() * (2.0 * r).cosh() / (2.0 * squeezed_denominator(r, phi)))
}

/// Odd cat moments; `beta_sq = 0` is the single-photon limit.
pub fn cat_moments(beta_sq: f64) -> Result<InputMoments, MomentsError> {
    if !(beta_sq.is_finite() && beta_sq >= 0.0) {
        return Err(MomentsError::Domain {
            name: "beta_sq",
            value: beta_sq,
            reason: "must be finite and >= 0",
        });
    }
    let reduced = if beta_sq == 0.0 {
        1.0
    } else {
        beta_sq / beta_sq.sinh()
    };
    InputMoments::new(reduced * beta_sq.cosh(), -reduced * reduced)
}

/// `|n>` has zero photon-number variance, so `q = -n`.
pub fn fock_moments(n: u32) -> Result<InputMoments, MomentsError> {
    InputMoments::new(f64::from(n), -f64::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::nth_window;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn coherent_is_poissonian() {
        for &phi in &[0.0, 0.3, FRAC_PI_2] {
            let m = squeezed_moments(0.0, phi, 2.0).unwrap();
            assert_eq!((m.n_in(), m.q_in()), (2.0, 0.0));
        }
    }

    #[test]
    fn squeezed_reference_values() {
        let m = squeezed_moments(0.4, FRAC_PI_2, 1.0).unwrap();
        assert!((m.n_in() - 1.168_717_473_152_422_3).abs() < 1e-14);
        assert!((m.q_in() - -0.325_022_391_236_479_4).abs() < 1e-14);
        assert!((squeezed_q2(0.4, FRAC_PI_2) - -0.550_671_035_882_778_4).abs() < 1e-14);
    }

    #[test]
    fn condition_examples() {
        assert!(squeezed_sub_poisson_condition(0.4, FRAC_PI_2));
        assert!(!squeezed_sub_poisson_condition(0.4, 0.0));
        assert!(squeezed_sub_poisson_condition(0.4, 1.0));
        assert!(squeezed_q2(0.4, 1.0) < 0.0);
        assert!(squeezed_sub_poisson_condition(3.0, 3.0 * FRAC_PI_2));
        assert!(!squeezed_sub_poisson_condition(0.0, FRAC_PI_2));
    }

    #[test]
    fn beta_critical() {
        let bc = squeezed_beta_critical_sq(0.4, FRAC_PI_2).unwrap();
        assert!((bc - 0.409_770_316_473_178_2).abs() < 1e-14);
        assert!(squeezed_moments(0.4, FRAC_PI_2, bc).unwrap().q_in().abs() < 1e-12);
        assert!(squeezed_moments(0.4, FRAC_PI_2, 1.01 * bc).unwrap().q_in() < 0.0);
        assert!(squeezed_moments(0.4, FRAC_PI_2, 0.99 * bc).unwrap().q_in() > 0.0);
        assert!(squeezed_beta_critical_sq(1e-9, FRAC_PI_2).unwrap() < 1e-8);
        assert!(squeezed_beta_critical_sq(0.4, 0.0).is_err());
    }

    #[test]
    fn cat_values() {
        let m = cat_moments(0.0).unwrap();
        assert_eq!((m.n_in(), m.q_in()), (1.0, -1.0));
        let m = cat_moments(1.0).unwrap();
        assert!((m.n_in() - 1.313_035_285_499_331_3).abs() < 1e-14);
        assert!((m.q_in() - -0.724_061_660_966_310_5).abs() < 1e-14);
        // (20 / sinh 20)^2 is about 6.8e-15.
        let q20 = cat_moments(20.0).unwrap().q_in();
        assert!(q20 < 0.0 && q20 > -1e-14);
        assert!(cat_moments(30.0).unwrap().q_in().abs() < 1e-15);
    }

    #[test]
    fn fock_values() {
        let m = fock_moments(0).unwrap();
        assert_eq!((m.n_in(), m.q_in()), (0.0, 0.0));
        let m = fock_moments(1).unwrap();
        assert_eq!((m.n_in(), m.q_in()), (1.0, -1.0));
        let (lo, hi) = nth_window(fock_moments(5).unwrap()).unwrap();
        let w = 15.0_f64.sqrt();
        assert!((lo - (5.0 - w)).abs() < 1e-14 && (hi - (5.0 + w)).abs() < 1e-14);
    }

    #[test]
    fn spec_phase_reduction() {
        let s = StateSpec::SqueezedDisplaced {
            r: 0.4,
            psi: 7.0,
            beta_abs: 1.0,
            theta: -1.0,
        }
        .canonical();
        if let StateSpec::SqueezedDisplaced { psi, theta, .. } = s {
            assert!((0.0..TAU).contains(&psi) && (0.0..TAU).contains(&theta));
        }
        assert_eq!(StateSpec::odd_cat(4.0), StateSpec::OddCat { beta_abs: 2.0 });
    }
}
