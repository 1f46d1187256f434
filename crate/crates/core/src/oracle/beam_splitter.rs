//! Beam-splitter unitary `exp[theta (a^dagger b - a b^dagger)]` with
//! `cos theta = sqrt(tau)` on the truncated two-mode space.
//!
//! The generator conserves `a^dagger a + b^dagger b`, so on the truncated
//! space it is block diagonal in the total photon number `s`. Each block is an
//! antisymmetric tridiagonal matrix `G_s`; with `D = diag(i^p)` it satisfies
//! `D^-1 G_s D = -i J_s` for the real symmetric tridiagonal `J_s`, so
//! `exp(theta G_s) = D V exp(-i theta Lambda) V^T D^-1` from the spectrum of `J_s`.
//! The spectrum does not depend on `tau` and is cached per block.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::state::{TruncatedState, TwoModeState};
use super::OracleError;

/// Spectrum of one photon-number block.
#[derive(Debug)]
struct SectorSpectrum {
    /// First signal level of the block; signal levels are `lo..lo + len`.
    lo: usize,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SectorSpectrum {
    fn new(dim: usize, total: usize) -> Self {
        let lo = total.saturating_sub(dim - 1);
        let hi = total.min(dim - 1);
        let len = hi - lo + 1;
        // <j+1, s-j-1| a^dagger b |j, s-j> = sqrt((j+1)(s-j)).
        let mut j_mat = DMatrix::zeros(len, len);
        for p in 0..len.saturating_sub(1) {
            let j = (lo + p) as f64;
            let c = ((j + 1.0) * (total as f64 - j)).sqrt();
            j_mat[(p + 1, p)] = c;
            j_mat[(p, p + 1)] = c;
        }
        let eig = SymmetricEigen::new(j_mat);
        Self {
            lo,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }
    }

    fn len(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Lazily built spectra for every photon-number block of a given truncation.
#[derive(Debug)]
pub struct SectorSpectra {
    dim: usize,
    sectors: Vec<OnceLock<SectorSpectrum>>,
}

impl SectorSpectra {
    pub fn new(dim: usize) -> Self {
        let count = 2 * dim - 1;
        Self {
            dim,
            sectors: (0..count).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn sector(&self, total: usize) -> &SectorSpectrum {
        self.sectors[total].get_or_init(|| SectorSpectrum::new(self.dim, total))
    }
}

/// Beam splitter of transmittance `tau` on a fixed truncation.
#[derive(Debug)]
pub struct BeamSplitter<'a> {
    spectra: &'a SectorSpectra,
    theta: f64,
    tau: f64,
    /// Block unitaries, filled on first use when many components share them.
    blocks: Vec<OnceLock<DMatrix<Complex64>>>,
}

impl<'a> BeamSplitter<'a> {
    pub fn new(spectra: &'a SectorSpectra, tau: f64) -> Result<Self, OracleError> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(OracleError::Domain {
                name: "tau",
                value: tau,
                reason: "transmittance must lie in [0, 1]",
            });
        }
        Ok(Self {
            spectra,
            theta: tau.sqrt().acos(),
            tau,
            blocks: (0..spectra.sectors.len()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `D V exp(-i theta Lambda) V^T D^-1` for one block.
    fn block(&self, total: usize) -> &DMatrix<Complex64> {
        self.blocks[total].get_or_init(|| {
            let sector = self.spectra.sector(total);
            let len = sector.len();
            let v = &sector.eigenvectors;
            let rot: Vec<Complex64> = sector
                .eigenvalues
                .iter()
                .map(|&e| Complex64::from_polar(1.0, -self.theta * e))
                .collect();
            let mut u = DMatrix::zeros(len, len);
            for p in 0..len {
                for q in 0..=p {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (l, r) in rot.iter().enumerate() {
                        acc += r * (v[(p, l)] * v[(q, l)]);
                    }
                    u[(p, q)] = acc * phase(p, false) * phase(q, true);
                    u[(q, p)] = acc * phase(q, false) * phase(p, true);
                }
            }
            u
        })
    }

    /// `U Psi` for a single amplitude matrix. With `cached` the block
    /// unitaries are formed once and reused; otherwise the spectrum is
    /// applied directly, which is cheaper for a single use.
    fn apply_amplitudes(&self, psi: &DMatrix<Complex64>, cached: bool) -> DMatrix<Complex64> {
        let n = self.spectra.dim;
        let mut out = DMatrix::zeros(n, n);
        let (rows, cols) = support(psi);
        if rows == 0 {
            return out;
        }
        for total in 0..=(rows - 1) + (cols - 1) {
            let sector = self.spectra.sector(total);
            let lo = sector.lo;
            let len = sector.len();
            let nonzero: Vec<(usize, Complex64)> = (0..len)
                .map(|p| (p, psi[(lo + p, total - lo - p)]))
                .filter(|(_, z)| z.norm_sqr() > 0.0)
                .collect();
            if nonzero.is_empty() {
                continue;
            }
            if cached {
                let u = self.block(total);
                for p in 0..len {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(q, z) in &nonzero {
                        acc += u[(p, q)] * z;
                    }
                    out[(lo + p, total - lo - p)] = acc;
                }
                continue;
            }
            let vt = &sector.eigenvectors;
            let w: Vec<Complex64> = (0..len)
                .map(|l| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(q, z) in &nonzero {
                        acc += z * phase(q, true) * vt[(q, l)];
                    }
                    acc * Complex64::from_polar(1.0, -self.theta * sector.eigenvalues[l])
                })
                .collect();
            for p in 0..len {
                let mut acc = Complex64::new(0.0, 0.0);
                for (l, wl) in w.iter().enumerate() {
                    acc += wl * vt[(p, l)];
                }
                out[(lo + p, total - lo - p)] = acc * phase(p, false);
            }
        }
        out
    }

    /// `U rho U^dagger` on the two-mode space.
    pub fn evolve(&self, state: &TwoModeState) -> TwoModeState {
        let cached = state.component_count() > 1;
        state.map_components(|psi| self.apply_amplitudes(psi, cached))
    }
}

/// `i^p` or `i^-p`.
fn phase(p: usize, inverse: bool) -> Complex64 {
    let k = if inverse { (4 - p % 4) % 4 } else { p % 4 };
    match k {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Number of leading rows and columns that hold non-zero amplitudes.
fn support(psi: &DMatrix<Complex64>) -> (usize, usize) {
    let mut rows = 0;
    let mut cols = 0;
    for k in 0..psi.ncols() {
        for j in 0..psi.nrows() {
            if psi[(j, k)].norm_sqr() > 0.0 {
                rows = rows.max(j + 1);
                cols = cols.max(k + 1);
            }
        }
    }
    (rows, cols)
}

/// Product state, its unitary image, and the reduced signal state.
#[derive(Debug)]
pub struct ChannelRun {
    pub before: TwoModeState,
    pub after: TwoModeState,
    pub output: TruncatedState,
}

/// Runs the channel and returns the intermediate two-mode states as well.
pub fn run_channel(
    spectra: &SectorSpectra,
    light: &TruncatedState,
    env: &TruncatedState,
    tau: f64,
    tail_tolerance: f64,
) -> Result<ChannelRun, OracleError> {
    if light.dim() != spectra.dim() || env.dim() != spectra.dim() {
        return Err(OracleError::DimensionMismatch {
            light: light.dim(),
            env: env.dim(),
        });
    }
    let bs = BeamSplitter::new(spectra, tau)?;
    let before = TwoModeState::product(light, env)?;
    let clipped = before.clipped_sector_weight();
    if clipped >= tail_tolerance {
        return Err(OracleError::Leakage {
            dim: spectra.dim(),
            weight: clipped,
        });
    }
    let after = bs.evolve(&before);
    let output = after.reduce_light();
    Ok(ChannelRun {
        before,
        after,
        output,
    })
}

/// Photon-number populations of the signal after the channel, together with
/// the trace deficit of the inputs. Equivalent to the diagonal of
/// `run_channel(..).output`, but streams over the product components instead
/// of storing the two-mode state.
pub fn channel_populations(
    spectra: &SectorSpectra,
    light: &TruncatedState,
    env: &TruncatedState,
    tau: f64,
    tail_tolerance: f64,
) -> Result<(Vec<f64>, f64), OracleError> {
    let n = spectra.dim();
    if light.dim() != n || env.dim() != n {
        return Err(OracleError::DimensionMismatch {
            light: light.dim(),
            env: env.dim(),
        });
    }
    let bs = BeamSplitter::new(spectra, tau)?;
    let light_parts = light.pure_components();
    let env_parts = env.pure_components();
    let mut clipped = 0.0;
    for (wl, l) in &light_parts {
        for (we, e) in &env_parts {
            let mut acc = 0.0;
            for j in 0..n {
                for k in (n - j)..n {
                    acc += l[j].norm_sqr() * e[k].norm_sqr();
                }
            }
            clipped += wl * we * acc;
        }
    }
    if clipped >= tail_tolerance {
        return Err(OracleError::Leakage { dim: n, weight: clipped });
    }
    let cached = light_parts.len() * env_parts.len() > 1;
    let mut populations = vec![0.0; n];
    for (wl, l) in &light_parts {
        for (we, e) in &env_parts {
            let out = bs.apply_amplitudes(&(l * e.transpose()), cached);
            for k in 0..n {
                for (j, p) in populations.iter_mut().enumerate() {
                    *p += wl * we * out[(j, k)].norm_sqr();
                }
            }
        }
    }
    Ok((populations, light.trace_deficit() + env.trace_deficit()))
}

/// Signal state after the thermal-loss channel.
pub fn beam_splitter_apply(
    light: &TruncatedState,
    env: &TruncatedState,
    tau: f64,
    tail_tolerance: f64,
) -> Result<TruncatedState, OracleError> {
    if light.dim() != env.dim() {
        return Err(OracleError::DimensionMismatch {
            light: light.dim(),
            env: env.dim(),
        });
    }
    let spectra = SectorSpectra::new(light.dim());
    run_channel(&spectra, light, env, tau, tail_tolerance).map(|run| run.output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::build::{build_state, build_thermal};
    use crate::oracle::state::measure_moments;
    use crate::states::StateSpec;
    use std::f64::consts::FRAC_PI_2;

    fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_at_full_transmittance() {
        let light = build_state(&StateSpec::squeezed(0.4, FRAC_PI_2, 1.0), 40, 1e-12).unwrap();
        let env = build_thermal(0.3, 40, 1e-12).unwrap();
        let out = beam_splitter_apply(&light, &env, 1.0, 1e-12).unwrap();
        assert!(max_diff(out.matrix(), light.matrix()) < 1e-10);
    }

    #[test]
    fn swap_at_zero_transmittance() {
        let light = TruncatedState::fock(2, 40).unwrap();
        let env = build_thermal(0.5, 40, 1e-12).unwrap();
        let out = beam_splitter_apply(&light, &env, 0.0, 1e-12).unwrap();
        assert!(max_diff(out.matrix(), env.matrix()) < 1e-10);
    }

    #[test]
    fn single_photon_loss_is_bernoulli() {
        let light = TruncatedState::fock(1, 8).unwrap();
        let env = build_thermal(0.0, 8, 1e-12).unwrap();
        let out = beam_splitter_apply(&light, &env, 0.3, 1e-12).unwrap();
        let p = out.probabilities();
        assert!((p[0] - 0.7).abs() < 1e-14);
        assert!((p[1] - 0.3).abs() < 1e-14);
        assert!((measure_moments(&out).n_mean - 0.3).abs() < 1e-14);
    }

    #[test]
    fn blocks_match_dense_generator_exponential() {
        // Dense check on a tiny space: build the full generator, exponentiate
        // it with nalgebra, and compare with the block construction.
        let n = 4;
        let tau = 0.37_f64;
        let theta = tau.sqrt().acos();
        let mut g = DMatrix::<f64>::zeros(n * n, n * n);
        for j in 0..n {
            for k in 0..n {
                let col = j * n + k;
                if j + 1 < n && k >= 1 {
                    g[((j + 1) * n + (k - 1), col)] += (((j + 1) * k) as f64).sqrt();
                }
                if j >= 1 && k + 1 < n {
                    g[((j - 1) * n + (k + 1), col)] -= ((j * (k + 1)) as f64).sqrt();
                }
            }
        }
        let u = (g * theta).exp();
        let light = build_state(&StateSpec::odd_cat(0.3), n, 1e-2).unwrap();
        let env = build_thermal(0.05, n, 1e-2).unwrap();
        let spectra = SectorSpectra::new(n);
        let run = run_channel(&spectra, &light, &env, tau, 1.0).unwrap();
        let dense_before = run.before.to_dense();
        let uc = u.map(|x| Complex64::new(x, 0.0));
        let expected = &uc * dense_before * uc.adjoint();
        assert!(max_diff(&run.after.to_dense(), &expected) < 1e-12);
    }

    #[test]
    fn populations_match_reduced_state() {
        let n = 60;
        let light = build_state(&StateSpec::squeezed(0.5, 1.0, 1.5), n, 1e-12).unwrap();
        let env = build_thermal(0.2, n, 1e-12).unwrap();
        let spectra = SectorSpectra::new(n);
        let full = run_channel(&spectra, &light, &env, 0.45, 1e-12).unwrap().output;
        let (p, deficit) = channel_populations(&spectra, &light, &env, 0.45, 1e-12).unwrap();
        let diff = full
            .probabilities()
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-15, "{diff}");
        assert_eq!(deficit, full.trace_deficit());
    }

    #[test]
    fn cached_blocks_match_direct_spectrum() {
        let n = 12;
        let spectra = SectorSpectra::new(n);
        let bs = BeamSplitter::new(&spectra, 0.62).unwrap();
        let psi = DMatrix::from_fn(n, n, |j, k| {
            Complex64::new((j as f64 + 0.3 * k as f64).sin(), (j * k) as f64 * 0.01)
        });
        let a = bs.apply_amplitudes(&psi, true);
        let b = bs.apply_amplitudes(&psi, false);
        assert!(max_diff(&a, &b) < 1e-13);
    }

    #[test]
    fn leakage_is_reported() {
        let light = TruncatedState::fock(5, 6).unwrap();
        let env = build_thermal(0.0, 6, 1e-12).unwrap();
        assert!(beam_splitter_apply(&light, &env, 0.5, 1e-12).is_ok());
        let env = TruncatedState::fock(1, 6).unwrap();
        assert!(matches!(
            beam_splitter_apply(&light, &env, 0.5, 1e-12),
            Err(OracleError::Leakage { .. })
        ));
    }
}
