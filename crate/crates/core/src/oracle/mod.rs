//! Brute-force Fock-space reference for the closed-form channel moments.
//!
//! States are represented on a truncated Fock space, the channel is simulated
//! by an explicit beam-splitter unitary acting on signal ⊗ thermal environment,
//! and moments are read off the reduced density matrix. Nothing here uses the
//! closed-form propagation formulas; they are only used to seed the initial
//! truncation.

mod beam_splitter;
mod build;
mod state;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::moments::MomentsError;
use crate::states::StateSpec;

pub use beam_splitter::{
    beam_splitter_apply, channel_populations, run_channel, BeamSplitter, ChannelRun, SectorSpectra,
};
pub use build::{build_state, build_thermal, MIN_DIM};
pub use state::{char_fn, factorial_moment, measure_moments, OracleReport, TruncatedState, TwoModeState};

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_CONVERGENCE_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_DIM: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{what} needs more than {dim} Fock levels: tail mass {tail_mass:e} (about {required_dim} levels required)")]
    Truncation {
        what: &'static str,
        dim: usize,
        tail_mass: f64,
        required_dim: usize,
    },
    #[error("product state has weight {weight:e} in photon-number sectors clipped by truncation at {dim}")]
    Leakage { dim: usize, weight: f64 },
    #[error("dimension mismatch: {light} vs {env}")]
    DimensionMismatch { light: usize, env: usize },
    #[error("{name} = {value} is outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("state failed the {check} check (value {value:e})")]
    Unphysical { check: &'static str, value: f64 },
    #[error("|alpha|^2 = {alpha_sq} is too large for occupied level {occupied} on {dim} levels")]
    CharFnGuard {
        alpha_sq: f64,
        occupied: usize,
        dim: usize,
    },
    #[error("moments did not converge below {max_dim} levels (last truncation {dim}, change {delta:e})")]
    NotConverged {
        dim: usize,
        max_dim: usize,
        delta: f64,
    },
    #[error(transparent)]
    Moments(#[from] MomentsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Largest population allowed outside the truncated space.
    pub tail_tolerance: f64,
    /// Largest change of `n` or `q` when the truncation is doubled.
    pub convergence_tolerance: f64,
    /// No truncation (including the doubled check) may exceed this.
    pub max_dim: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            convergence_tolerance: DEFAULT_CONVERGENCE_TOLERANCE,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// Starting truncation `ceil(8 (max(n_in, n_th) + 1)) + 16`.
pub fn initial_dim(n_in: f64, n_th: f64) -> usize {
    (8.0 * (n_in.max(n_th) + 1.0)).ceil() as usize + 16
}

/// Two-moment transmittance distribution used by the fluctuating oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmittanceMixture {
    /// `(tau_i, weight_i)` pairs.
    pub support: Vec<(f64, f64)>,
}

impl TransmittanceMixture {
    /// Two points `tau_bar ± sqrt(Var)` when both lie in `[0, 1]`; otherwise
    /// `{0, tau_bar, 1}` with weights `F (1 - tau_bar)`, `1 - F`, `F tau_bar`.
    pub fn matching(tau_bar: f64, strength: f64) -> Result<Self, OracleError> {
        if !(0.0..=1.0).contains(&tau_bar) {
            return Err(OracleError::Domain {
                name: "tau_bar",
                value: tau_bar,
                reason: "must lie in [0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&strength) {
            return Err(OracleError::Domain {
                name: "F",
                value: strength,
                reason: "must lie in [0, 1]",
            });
        }
        let var = strength * tau_bar * (1.0 - tau_bar);
        if var == 0.0 {
            return Ok(Self {
                support: vec![(tau_bar, 1.0)],
            });
        }
        let sd = var.sqrt();
        let (lo, hi) = (tau_bar - sd, tau_bar + sd);
        let support = if lo >= 0.0 && hi <= 1.0 {
            vec![(lo, 0.5), (hi, 0.5)]
        } else {
            vec![
                (0.0, strength * (1.0 - tau_bar)),
                (tau_bar, 1.0 - strength),
                (1.0, strength * tau_bar),
            ]
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .collect()
        };
        Ok(Self { support })
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|(t, w)| t * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support.iter().map(|(t, w)| w * (t - m).powi(2)).sum()
    }
}

/// Moments of the transmittance-averaged output state.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuatingReport {
    pub q_out: f64,
    pub n_out: f64,
    pub truncation_used: usize,
    pub mixture: TransmittanceMixture,
    /// Change of the moments when the truncation is doubled.
    pub convergence_delta: f64,
}

/// Output of an adaptive run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergedReport {
    pub report: OracleReport,
    /// Change of `n` or `q` when the accepted truncation is doubled.
    pub convergence_delta: f64,
}

/// Reference simulator with a cache of beam-splitter spectra per truncation.
///
/// Individual runs are sequential; an `Oracle` may be shared across threads.
#[derive(Debug, Default)]
pub struct Oracle {
    config: OracleConfig,
    spectra: Mutex<HashMap<usize, Arc<SectorSpectra>>>,
}

impl Oracle {
    pub fn new(config: OracleConfig) -> Self {
        Self {
            config,
            spectra: Mutex::default(),
        }
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    pub fn spectra(&self, dim: usize) -> Arc<SectorSpectra> {
        let mut cache = self.spectra.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(dim)
            .or_insert_with(|| Arc::new(SectorSpectra::new(dim)))
            .clone()
    }

    /// Signal state after the deterministic channel at a fixed truncation.
    pub fn channel_output(
        &self,
        spec: &StateSpec,
        n_th: f64,
        tau: f64,
        dim: usize,
    ) -> Result<TruncatedState, OracleError> {
        let tol = self.config.tail_tolerance;
        let light = build_state(spec, dim, tol)?;
        let env = build_thermal(n_th, dim, tol)?;
        run_channel(&self.spectra(dim), &light, &env, tau, tol).map(|r| r.output)
    }

    /// Dephased signal output (photon-number populations only) of the
    /// deterministic channel; enough for the moments and much cheaper.
    pub fn channel_populations(
        &self,
        spec: &StateSpec,
        n_th: f64,
        tau: f64,
        dim: usize,
    ) -> Result<TruncatedState, OracleError> {
        let tol = self.config.tail_tolerance;
        let light = build_state(spec, dim, tol)?;
        let env = build_thermal(n_th, dim, tol)?;
        let (p, deficit) = channel_populations(&self.spectra(dim), &light, &env, tau, tol)?;
        Ok(TruncatedState::from_diagonal(&p, deficit))
    }

    /// Reduced output state of the fluctuating channel, mixing the
    /// deterministic outputs over a distribution with the requested two moments.
    pub fn fluctuating_output(
        &self,
        spec: &StateSpec,
        n_th: f64,
        tau_bar: f64,
        strength: f64,
        dim: usize,
    ) -> Result<(TruncatedState, TransmittanceMixture), OracleError> {
        self.mix(tau_bar, strength, |tau| self.channel_output(spec, n_th, tau, dim))
    }

    fn fluctuating_populations(
        &self,
        spec: &StateSpec,
        n_th: f64,
        tau_bar: f64,
        strength: f64,
        dim: usize,
    ) -> Result<TruncatedState, OracleError> {
        self.mix(tau_bar, strength, |tau| {
            self.channel_populations(spec, n_th, tau, dim)
        })
        .map(|(s, _)| s)
    }

    fn mix(
        &self,
        tau_bar: f64,
        strength: f64,
        channel: impl Fn(f64) -> Result<TruncatedState, OracleError>,
    ) -> Result<(TruncatedState, TransmittanceMixture), OracleError> {
        let mixture = TransmittanceMixture::matching(tau_bar, strength)?;
        let outputs = mixture
            .support
            .iter()
            .map(|&(tau, _)| channel(tau))
            .collect::<Result<Vec<_>, _>>()?;
        let parts: Vec<(f64, &TruncatedState)> = mixture
            .support
            .iter()
            .zip(&outputs)
            .map(|(&(_, w), s)| (w, s))
            .collect();
        Ok((TruncatedState::mixture(&parts)?, mixture))
    }

    /// Input-state moments with adaptive truncation.
    pub fn state_report(&self, spec: &StateSpec) -> Result<ConvergedReport, OracleError> {
        let seed = initial_dim(spec.moments()?.n_in(), 0.0);
        let tol = self.config.tail_tolerance;
        self.converge(seed, |dim| {
            build_state(spec, dim, tol).map(|s| measure_moments(&s))
        })
    }

    /// Deterministic-channel output moments with adaptive truncation.
    pub fn channel_report(
        &self,
        spec: &StateSpec,
        n_th: f64,
        tau: f64,
    ) -> Result<ConvergedReport, OracleError> {
        let seed = initial_dim(spec.moments()?.n_in(), n_th);
        self.converge(seed, |dim| {
            self.channel_populations(spec, n_th, tau, dim)
                .map(|s| measure_moments(&s))
        })
    }

    /// Fluctuating-channel q-parameter with adaptive truncation.
    pub fn fluctuating_q(
        &self,
        spec: &StateSpec,
        n_th: f64,
        tau_bar: f64,
        strength: f64,
    ) -> Result<FluctuatingReport, OracleError> {
        let seed = initial_dim(spec.moments()?.n_in(), n_th);
        let converged = self.converge(seed, |dim| {
            self.fluctuating_populations(spec, n_th, tau_bar, strength, dim)
                .map(|s| measure_moments(&s))
        })?;
        Ok(FluctuatingReport {
            q_out: converged.report.q_param,
            n_out: converged.report.n_mean,
            truncation_used: converged.report.truncation_used,
            mixture: TransmittanceMixture::matching(tau_bar, strength)?,
            convergence_delta: converged.convergence_delta,
        })
    }

    /// Runs `eval` from `seed` upwards and accepts the result at `dim` once it
    /// agrees with the result at `min(2 dim, max_dim)`. Candidates stop at
    /// two thirds of the cap so that the comparison partner is always at least
    /// `1.5 dim`. A truncation error jumps to the reported requirement.
    fn converge(
        &self,
        seed: usize,
        eval: impl Fn(usize) -> Result<OracleReport, OracleError>,
    ) -> Result<ConvergedReport, OracleError> {
        let max_dim = self.config.max_dim;
        let top = max_dim * 2 / 3;
        let mut dim = seed.max(MIN_DIM).min(top);
        let mut last_delta = f64::NAN;
        let advance = |dim: usize, want: usize| (want.min(top) > dim).then(|| want.min(top));
        loop {
            let here = match eval(dim) {
                Ok(r) => Some(r),
                Err(OracleError::Truncation { required_dim, .. }) => {
                    let want = if required_dim > dim { required_dim } else { 2 * dim };
                    match advance(dim, want) {
                        Some(next) => {
                            dim = next;
                            continue;
                        }
                        None => None,
                    }
                }
                Err(OracleError::Leakage { .. }) => None,
                Err(e) => return Err(e),
            };
            if let Some(here) = here {
                match eval((2 * dim).min(max_dim)) {
                    Ok(partner) => {
                        let delta = (here.n_mean - partner.n_mean)
                            .abs()
                            .max((here.q_param - partner.q_param).abs());
                        if delta < self.config.convergence_tolerance {
                            return Ok(ConvergedReport {
                                report: here,
                                convergence_delta: delta,
                            });
                        }
                        last_delta = delta;
                    }
                    Err(OracleError::Truncation { .. } | OracleError::Leakage { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            match advance(dim, 2 * dim) {
                Some(next) => dim = next,
                None => break,
            }
        }
        Err(OracleError::NotConverged {
            dim,
            max_dim,
            delta: last_delta,
        })
    }
}

/// Fluctuating-channel q-parameter at a fixed truncation `dim`.
pub fn fluctuating_q_oracle(
    spec: &StateSpec,
    n_th: f64,
    tau_bar: f64,
    strength: f64,
    dim: usize,
    config: OracleConfig,
) -> Result<f64, OracleError> {
    let oracle = Oracle::new(config);
    let state = oracle.fluctuating_populations(spec, n_th, tau_bar, strength, dim)?;
    Ok(measure_moments(&state).q_param)
}
