//! Closed-form photon-number moments of a thermal-loss channel with
//! fluctuating transmittance, and the critical transmittance above which the
//! transmitted light stays sub-Poissonian.
//!
//! Everything here is pure arithmetic on `f64`; the functions are safe to call
//! from any number of threads.

use thiserror::Error;

/// Values within this distance outside `[0, 1]` are clamped onto the interval.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentsError {
    #[error("{name} = {value} is outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("critical transmittance {tau_c} lies outside [0, 1] (coefficients a = {a}, n_th = {n_th}, q_in = {q_in})")]
    Inconsistent {
        tau_c: f64,
        a: f64,
        n_th: f64,
        q_in: f64,
    },
}

fn domain(name: &'static str, value: f64, reason: &'static str) -> MomentsError {
    MomentsError::Domain {
        name,
        value,
        reason,
    }
}

/// Mean photon number and q-parameter (variance minus mean) of an input state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputMoments {
    n_in: f64,
    q_in: f64,
}

impl InputMoments {
    /// Validates `n_in >= 0` and `q_in >= -n_in^2` (non-negative `<:n^2:>`).
    ///
    /// A relative slack of a few ulps is allowed on the second bound so that
    /// closed forms which sit exactly on it (Fock states, cats) are accepted.
    pub fn new(n_in: f64, q_in: f64) -> Result<Self, MomentsError> {
        if !n_in.is_finite() || n_in < 0.0 {
            return Err(domain("n_in", n_in, "mean photon number must be finite and >= 0"));
        }
        if !q_in.is_finite() {
            return Err(domain("q_in", q_in, "q-parameter must be finite"));
        }
        let floor = -n_in * n_in;
        if q_in < floor - 4.0 * f64::EPSILON * n_in * n_in {
            return Err(domain("q_in", q_in, "normally ordered second moment would be negative"));
        }
        Ok(Self { n_in, q_in })
    }

    pub fn n_in(&self) -> f64 {
        self.n_in
    }

    pub fn q_in(&self) -> f64 {
        self.q_in
    }

    pub fn is_sub_poissonian(&self) -> bool {
        self.q_in < 0.0
    }
}

/// Deterministic channel: a beam splitter of transmittance `tau` mixing the
/// signal with a thermal mode of mean occupancy `n_th`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    tau: f64,
    n_th: f64,
}

impl ChannelParams {
    pub fn new(tau: f64, n_th: f64) -> Result<Self, MomentsError> {
        check_unit("tau", tau)?;
        check_occupancy(n_th)?;
        Ok(Self { tau, n_th })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_th(&self) -> f64 {
        self.n_th
    }
}

/// Averaged transmittance together with the fluctuation strength `F` that
/// sets `Var(tau) = F (1 - tau_bar) tau_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationModel {
    tau_bar: f64,
    strength: f64,
}

impl FluctuationModel {
    pub fn new(tau_bar: f64, strength: f64) -> Result<Self, MomentsError> {
        check_unit("tau_bar", tau_bar)?;
        check_strength(strength)?;
        Ok(Self { tau_bar, strength })
    }

    pub fn tau_bar(&self) -> f64 {
        self.tau_bar
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn variance(&self) -> f64 {
        self.strength * (1.0 - self.tau_bar) * self.tau_bar
    }

    /// Second raw moment `<tau^2> = F tau_bar + (1 - F) tau_bar^2`.
    pub fn second_moment(&self) -> f64 {
        self.tau_bar * self.tau_bar + self.variance()
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<(), MomentsError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(domain(name, value, "must lie in [0, 1]"))
    }
}

fn check_strength(strength: f64) -> Result<(), MomentsError> {
    check_unit("F", strength)
}

fn check_occupancy(n_th: f64) -> Result<(), MomentsError> {
    if n_th.is_finite() && n_th >= 0.0 {
        Ok(())
    } else {
        Err(domain("n_th", n_th, "thermal occupancy must be finite and >= 0"))
    }
}

/// Outcome of the critical-transmittance solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdResult {
    /// The output is sub-Poissonian for every averaged transmittance above `tau_c`.
    Critical(f64),
    /// Pure-loss, non-fluctuating channel: any transmittance preserves sub-Poissonian statistics.
    AlwaysSub,
    /// The input itself is not sub-Poissonian.
    NoThreshold,
}

impl ThresholdResult {
    /// The threshold as a number; `AlwaysSub` maps to zero.
    pub fn tau_c(&self) -> Option<f64> {
        match *self {
            ThresholdResult::Critical(t) => Some(t),
            ThresholdResult::AlwaysSub => Some(0.0),
            ThresholdResult::NoThreshold => None,
        }
    }
}

/// Mandel Q, Fano factor and `g2(0)` for a state with q-parameter `q` and mean `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedStatistics {
    pub mandel_q: f64,
    pub fano: f64,
    pub g2_zero: f64,
}

/// Coefficients of the fluctuating-channel q-parameter written as a
/// quadratic in the averaged transmittance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCoefficients {
    pub a: f64,
    pub g: f64,
}

/// Mean thermal occupancy `1 / (exp(x) - 1)` for `x = hbar omega / (k_B T)`.
pub fn thermal_occupancy(beta_hbar_omega: f64) -> Result<f64, MomentsError> {
    if beta_hbar_omega.is_nan() || beta_hbar_omega <= 0.0 {
        return Err(domain(
            "beta_hbar_omega",
            beta_hbar_omega,
            "must be positive (finite temperature and frequency)",
        ));
    }
    Ok(1.0 / beta_hbar_omega.exp_m1())
}

/// Output mean photon number `tau n_in + (1 - tau) n_th`.
pub fn channel_mean(m: InputMoments, c: ChannelParams) -> f64 {
    c.tau * m.n_in + (1.0 - c.tau) * c.n_th
}

/// Output q-parameter of the deterministic channel.
pub fn channel_q(m: InputMoments, c: ChannelParams) -> f64 {
    let t = c.tau;
    let s = 1.0 - t;
    t * t * m.q_in + s * s * c.n_th * c.n_th + 2.0 * t * s * m.n_in * c.n_th
}

pub fn coefficients_a_g(
    m: InputMoments,
    n_th: f64,
    strength: f64,
) -> Result<QuadraticCoefficients, MomentsError> {
    check_occupancy(n_th)?;
    check_strength(strength)?;
    let d = m.n_in - n_th;
    let g = m.q_in - m.n_in * m.n_in + 2.0 * d * d;
    let a = 2.0 * m.n_in * n_th - n_th * n_th + g * strength;
    Ok(QuadraticCoefficients { a, g })
}

/// q-parameter of the output averaged over the transmittance distribution,
/// as the quadratic `tau_bar^2 (q_in - a) + tau_bar (a - n_th^2) + n_th^2`.
pub fn q_out(m: InputMoments, f: FluctuationModel, n_th: f64) -> Result<f64, MomentsError> {
    let QuadraticCoefficients { a, .. } = coefficients_a_g(m, n_th, f.strength)?;
    let t = f.tau_bar;
    let n2 = n_th * n_th;
    // Grouped so both endpoints are reproduced exactly.
    Ok(t * t * m.q_in + (1.0 - t) * (t * a + n2))
}

/// The same quantity written in terms of the transmittance mean and
/// variance, valid for any distribution with those two moments.
pub fn q_out_from_moments(m: InputMoments, n_th: f64, tau_bar: f64, var_tau: f64) -> f64 {
    let mean_out = tau_bar * m.n_in + (1.0 - tau_bar) * n_th;
    let d = m.n_in - n_th;
    tau_bar * tau_bar * (m.q_in - m.n_in * m.n_in)
        + mean_out * mean_out
        + var_tau * (m.q_in - m.n_in * m.n_in + 2.0 * d * d)
}

/// Critical averaged transmittance for the fluctuating thermal-loss channel.
///
/// The selected root is `-[(a - n_th^2) + sqrt((a + n_th^2)^2 - 4 n_th^2 q_in)] / [2 (q_in - a)]`.
/// When `a - n_th^2 <= 0` it is evaluated in the rationalized form
/// `2 n_th^2 / (sqrt(D) - (a - n_th^2))`, which is the same root and reduces
/// to the linear solution `n_th^2 / (n_th^2 - a)` when `q_in = a`.
pub fn critical_transmittance(
    m: InputMoments,
    n_th: f64,
    strength: f64,
) -> Result<ThresholdResult, MomentsError> {
    let QuadraticCoefficients { a, .. } = coefficients_a_g(m, n_th, strength)?;
    if !m.is_sub_poissonian() {
        return Ok(ThresholdResult::NoThreshold);
    }
    if n_th == 0.0 && strength == 0.0 {
        return Ok(ThresholdResult::AlwaysSub);
    }
    let q = m.q_in;
    let c = n_th * n_th;
    let lin = a - c;
    let quad = q - a;
    // (a + n_th^2)^2 - 4 n_th^2 q_in; both terms are non-negative for q_in < 0.
    let disc = (a + c) * (a + c) - 4.0 * c * q;
    let root = disc.sqrt();
    let tau_c = if lin > 0.0 {
        // lin > 0 forces a > 0 > q_in, so the quadratic coefficient is strictly negative.
        -(lin + root) / (2.0 * quad)
    } else {
        let denom = root - lin;
        if denom > 0.0 {
            2.0 * c / denom
        } else {
            // a = n_th^2 = 0: the output q-parameter is tau_bar^2 q_in.
            0.0
        }
    };
    clamp_unit(tau_c, a, n_th, q).map(ThresholdResult::Critical)
}

fn clamp_unit(tau_c: f64, a: f64, n_th: f64, q_in: f64) -> Result<f64, MomentsError> {
    if (0.0..=1.0).contains(&tau_c) {
        Ok(tau_c)
    } else if (-CLAMP_TOLERANCE..0.0).contains(&tau_c) {
        Ok(0.0)
    } else if tau_c > 1.0 && tau_c <= 1.0 + CLAMP_TOLERANCE {
        Ok(1.0)
    } else {
        Err(MomentsError::Inconsistent {
            tau_c,
            a,
            n_th,
            q_in,
        })
    }
}

/// Zero-temperature threshold `F (q_in + n_in^2) / (F (q_in + n_in^2) - q_in)`.
pub fn critical_transmittance_t0(
    m: InputMoments,
    strength: f64,
) -> Result<ThresholdResult, MomentsError> {
    check_strength(strength)?;
    if !m.is_sub_poissonian() {
        return Ok(ThresholdResult::NoThreshold);
    }
    let num = strength * (m.q_in + m.n_in * m.n_in);
    let tau_c = num / (num - m.q_in);
    clamp_unit(tau_c, num, 0.0, m.q_in).map(ThresholdResult::Critical)
}

/// Threshold without transmittance fluctuations, `n_th / (n_th + sqrt(n_in^2 - q_in) - n_in)`.
pub fn critical_transmittance_f0(
    m: InputMoments,
    n_th: f64,
) -> Result<ThresholdResult, MomentsError> {
    check_occupancy(n_th)?;
    if !m.is_sub_poissonian() {
        return Ok(ThresholdResult::NoThreshold);
    }
    if n_th == 0.0 {
        return Ok(ThresholdResult::Critical(0.0));
    }
    let tau_c = n_th / (n_th + (m.n_in * m.n_in - m.q_in).sqrt() - m.n_in);
    clamp_unit(tau_c, 0.0, n_th, m.q_in).map(ThresholdResult::Critical)
}

/// Interval `(n_-, n_+)` of thermal occupancies for which the coefficient `g`
/// is negative, i.e. where stronger fluctuations lower the threshold.
pub fn nth_window(m: InputMoments) -> Result<(f64, f64), MomentsError> {
    let radicand = m.n_in * m.n_in - m.q_in;
    if radicand < 0.0 {
        return Err(domain("n_in^2 - q_in", radicand, "must be non-negative"));
    }
    let half_width = (radicand / 2.0).sqrt();
    Ok((m.n_in - half_width, m.n_in + half_width))
}

pub fn derived_statistics(q: f64, n: f64) -> Result<DerivedStatistics, MomentsError> {
    if n.is_nan() || n <= 0.0 {
        return Err(domain("n", n, "mean photon number must be positive"));
    }
    let mandel_q = q / n;
    Ok(DerivedStatistics {
        mandel_q,
        fano: mandel_q + 1.0,
        g2_zero: mandel_q / n + 1.0,
    })
}
