use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::OracleError;

/// Weights below this are treated as numerically absent when a density
/// matrix is split into pure components.
pub(crate) const COMPONENT_CUTOFF: f64 = 1e-36;

const HERMITIAN_TOLERANCE: f64 = 1e-12;
const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Density operator on the Fock levels `0..dim`.
#[derive(Debug, Clone)]
pub struct TruncatedState {
    matrix: DMatrix<Complex64>,
    trace_deficit: f64,
    pure: Option<DVector<Complex64>>,
}

impl TruncatedState {
    /// Projector onto a normalized vector; `trace_deficit` is the probability
    /// mass that was cut off before normalization.
    pub fn from_pure(vector: DVector<Complex64>, trace_deficit: f64) -> Self {
        let matrix = &vector * vector.adjoint();
        Self {
            matrix,
            trace_deficit,
            pure: Some(vector),
        }
    }

    pub fn from_diagonal(probabilities: &[f64], trace_deficit: f64) -> Self {
        let n = probabilities.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(probabilities[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self {
            matrix,
            trace_deficit,
            pure: None,
        }
    }

    pub fn from_matrix(matrix: DMatrix<Complex64>, trace_deficit: f64) -> Result<Self, OracleError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(OracleError::DimensionMismatch {
                light: matrix.nrows(),
                env: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            trace_deficit,
            pure: None,
        })
    }

    pub fn fock(level: usize, dim: usize) -> Result<Self, OracleError> {
        if level >= dim {
            return Err(OracleError::Truncation {
                what: "fock state",
                dim,
                tail_mass: 1.0,
                required_dim: level + 1,
            });
        }
        let mut v = DVector::zeros(dim);
        v[level] = Complex64::new(1.0, 0.0);
        Ok(Self::from_pure(v, 0.0))
    }

    /// Convex combination `sum_i w_i rho_i` of states with equal dimension.
    pub fn mixture(parts: &[(f64, &TruncatedState)]) -> Result<Self, OracleError> {
        let dim = parts.first().map(|(_, s)| s.dim()).unwrap_or(0);
        let mut matrix = DMatrix::zeros(dim, dim);
        let mut deficit = 0.0;
        for (w, s) in parts {
            if s.dim() != dim {
                return Err(OracleError::DimensionMismatch {
                    light: dim,
                    env: s.dim(),
                });
            }
            matrix += &s.matrix * Complex64::new(*w, 0.0);
            deficit += w * s.trace_deficit;
        }
        Ok(Self {
            matrix,
            trace_deficit: deficit,
            pure: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Photon-number distribution `p_k = rho_kk`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// Highest level whose population exceeds `threshold`.
    pub fn occupied_level(&self, threshold: f64) -> usize {
        self.probabilities()
            .iter()
            .rposition(|&p| p > threshold)
            .unwrap_or(0)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)] == Complex64::new(0.0, 0.0)))
    }

    /// Checks Hermiticity, trace and positivity up to roundoff.
    pub fn check_physical(&self, tail_tolerance: f64) -> Result<(), OracleError> {
        let hermitian_error = (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if hermitian_error > HERMITIAN_TOLERANCE {
            return Err(OracleError::Unphysical {
                check: "hermiticity",
                value: hermitian_error,
            });
        }
        let trace_error = (self.trace() - 1.0).abs();
        if trace_error > tail_tolerance {
            return Err(OracleError::Unphysical {
                check: "trace",
                value: trace_error,
            });
        }
        let min_eigenvalue = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eigenvalue < EIGENVALUE_FLOOR {
            return Err(OracleError::Unphysical {
                check: "positivity",
                value: min_eigenvalue,
            });
        }
        Ok(())
    }

    /// Weighted pure components `rho = sum_i w_i |v_i><v_i|`.
    pub(crate) fn pure_components(&self) -> Vec<(f64, DVector<Complex64>)> {
        if let Some(v) = &self.pure {
            return vec![(1.0, v.clone())];
        }
        let n = self.dim();
        if self.is_diagonal() {
            return (0..n)
                .filter_map(|k| {
                    let p = self.matrix[(k, k)].re;
                    (p > COMPONENT_CUTOFF).then(|| {
                        let mut v = DVector::zeros(n);
                        v[k] = Complex64::new(1.0, 0.0);
                        (p, v)
                    })
                })
                .collect();
        }
        let eig = SymmetricEigen::new(self.matrix.clone());
        eig.eigenvalues
            .iter()
            .zip(eig.eigenvectors.column_iter())
            .filter(|(w, _)| **w > COMPONENT_CUTOFF)
            .map(|(w, v)| (*w, v.into_owned()))
            .collect()
    }
}

/// Two-mode state (signal, environment) stored as an ensemble of pure
/// amplitude matrices `Psi[j, k]` with `j` the signal level and `k` the
/// environment level.
///
/// This is the same operator as the `dim^2 x dim^2` density matrix; the dense
/// form is available through [`TwoModeState::to_dense`] for small `dim`.
#[derive(Debug, Clone)]
pub struct TwoModeState {
    dim: usize,
    components: Vec<(f64, DMatrix<Complex64>)>,
    trace_deficit: f64,
}

impl TwoModeState {
    pub fn product(light: &TruncatedState, env: &TruncatedState) -> Result<Self, OracleError> {
        if light.dim() != env.dim() {
            return Err(OracleError::DimensionMismatch {
                light: light.dim(),
                env: env.dim(),
            });
        }
        let env_parts = env.pure_components();
        let mut components = Vec::new();
        for (wl, l) in light.pure_components() {
            for (we, e) in &env_parts {
                components.push((wl * we, &l * e.transpose()));
            }
        }
        Ok(Self {
            dim: light.dim(),
            components,
            trace_deficit: light.trace_deficit() + env.trace_deficit(),
        })
    }

    /// Same state with every amplitude matrix replaced by `f(Psi)`.
    pub(crate) fn map_components(
        &self,
        f: impl Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>,
    ) -> Self {
        Self {
            dim: self.dim,
            components: self.components.iter().map(|(w, psi)| (*w, f(psi))).collect(),
            trace_deficit: self.trace_deficit,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    fn weighted_sum(&self, f: impl Fn(usize, usize) -> f64) -> f64 {
        self.components
            .iter()
            .map(|(w, psi)| {
                let mut acc = 0.0;
                for k in 0..self.dim {
                    for j in 0..self.dim {
                        acc += psi[(j, k)].norm_sqr() * f(j, k);
                    }
                }
                w * acc
            })
            .sum()
    }

    pub fn trace(&self) -> f64 {
        self.weighted_sum(|_, _| 1.0)
    }

    /// `<a^dagger a + b^dagger b>`.
    pub fn total_photon_mean(&self) -> f64 {
        self.weighted_sum(|j, k| (j + k) as f64)
    }

    /// Population of the product levels with `j + k >= dim`, where the
    /// truncated space misses some states of the photon-number sector.
    pub fn clipped_sector_weight(&self) -> f64 {
        let n = self.dim;
        self.weighted_sum(|j, k| if j + k >= n { 1.0 } else { 0.0 })
    }

    /// Partial trace over the environment mode.
    pub fn reduce_light(&self) -> TruncatedState {
        let n = self.dim;
        let mut rho = DMatrix::<Complex64>::zeros(n, n);
        for (w, psi) in &self.components {
            let rows = last_nonzero_row(psi).map_or(0, |r| r + 1);
            if rows == 0 {
                continue;
            }
            let block = psi.rows(0, rows);
            let gram = block * block.adjoint();
            let mut view = rho.view_mut((0, 0), (rows, rows));
            view += gram * Complex64::new(*w, 0.0);
        }
        TruncatedState {
            matrix: rho,
            trace_deficit: self.trace_deficit,
            pure: None,
        }
    }

    /// Dense `dim^2 x dim^2` density matrix in the (signal ⊗ environment)
    /// basis, index `j * dim + k`.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim;
        let mut rho = DMatrix::zeros(n * n, n * n);
        for (w, psi) in &self.components {
            let v = DVector::from_fn(n * n, |i, _| psi[(i / n, i % n)]);
            rho += (&v * v.adjoint()) * Complex64::new(*w, 0.0);
        }
        rho
    }
}

fn last_nonzero_row(psi: &DMatrix<Complex64>) -> Option<usize> {
    (0..psi.nrows())
        .rev()
        .find(|&j| psi.row(j).iter().any(|z| z.norm_sqr() > 0.0))
}

/// Photon-number moments of a truncated state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub n_mean: f64,
    pub q_param: f64,
    pub truncation_used: usize,
    pub trace_deficit: f64,
}

/// Mean and q-parameter `sum k^2 p_k - n - n^2` from the diagonal.
pub fn measure_moments(s: &TruncatedState) -> OracleReport {
    let p = s.probabilities();
    let n_mean: f64 = p.iter().enumerate().map(|(k, pk)| k as f64 * pk).sum();
    let second: f64 = p
        .iter()
        .enumerate()
        .map(|(k, pk)| (k * k) as f64 * pk)
        .sum();
    OracleReport {
        n_mean,
        q_param: second - n_mean - n_mean * n_mean,
        truncation_used: s.dim(),
        trace_deficit: s.trace_deficit(),
    }
}

/// `<a^dagger^m a^m> = sum_k k (k-1) ... (k-m+1) p_k`.
pub fn factorial_moment(s: &TruncatedState, order: u32) -> f64 {
    s.probabilities()
        .iter()
        .enumerate()
        .map(|(k, pk)| {
            let falling: f64 = (0..order).map(|i| k as f64 - f64::from(i)).product();
            falling * pk
        })
        .sum()
}

/// Normally ordered characteristic function `Tr[exp(alpha a^dagger) exp(-alpha* a) rho]`.
///
/// Both exponentials are triangular on the truncated space and their product
/// only passes through levels below `min(j, k)`, so the truncated evaluation is
/// exact for the truncated `rho`. The guard keeps the matrix elements in a
/// range where the alternating sums stay well conditioned.
pub fn char_fn(
    s: &TruncatedState,
    alpha: Complex64,
    tail_tolerance: f64,
) -> Result<Complex64, OracleError> {
    let n = s.dim();
    let occupied = s.occupied_level(tail_tolerance) + 1;
    if alpha.norm_sqr() * occupied as f64 > n as f64 / 2.0 {
        return Err(OracleError::CharFnGuard {
            alpha_sq: alpha.norm_sqr(),
            occupied,
            dim: n,
        });
    }
    let creation = ladder_exponential(n, alpha);
    let annihilation = ladder_exponential(n, -alpha.conj()).transpose();
    let op = creation * annihilation;
    let rho = s.matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            acc += op[(j, k)] * rho[(k, j)];
        }
    }
    Ok(acc)
}

/// `exp(x a^dagger)` on the truncated space: lower triangular with
/// entries `x^(j-l) sqrt(j!/l!) / (j-l)!`.
fn ladder_exponential(n: usize, x: Complex64) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    for l in 0..n {
        let mut entry = Complex64::new(1.0, 0.0);
        m[(l, l)] = entry;
        for j in (l + 1)..n {
            entry *= x * ((j as f64).sqrt() / (j - l) as f64);
            m[(j, l)] = entry;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fock_state_moments() {
        let s = TruncatedState::fock(3, 8).unwrap();
        let r = measure_moments(&s);
        assert_eq!((r.n_mean, r.q_param), (3.0, -3.0));
        assert!(TruncatedState::fock(8, 8).is_err());
        s.check_physical(1e-12).unwrap();
    }

    #[test]
    fn char_fn_normalization() {
        let s = TruncatedState::fock(2, 10).unwrap();
        let chi = char_fn(&s, Complex64::new(0.0, 0.0), 1e-12).unwrap();
        assert!((chi - 1.0).norm() < 1e-15);
    }

    #[test]
    fn char_fn_of_single_photon() {
        // <1| exp(alpha a^dagger) exp(-alpha* a) |1> = 1 - |alpha|^2.
        let s = TruncatedState::fock(1, 6).unwrap();
        let a = Complex64::new(0.3, -0.2);
        let chi = char_fn(&s, a, 1e-12).unwrap();
        assert!((chi - (1.0 - a.norm_sqr())).norm() < 1e-15);
    }

    #[test]
    fn char_fn_guard() {
        let s = TruncatedState::fock(5, 8).unwrap();
        assert!(matches!(
            char_fn(&s, Complex64::new(2.0, 0.0), 1e-12),
            Err(OracleError::CharFnGuard { .. })
        ));
    }

    #[test]
    fn mixture_and_components() {
        let a = TruncatedState::fock(0, 4).unwrap();
        let b = TruncatedState::fock(2, 4).unwrap();
        let m = TruncatedState::mixture(&[(0.25, &a), (0.75, &b)]).unwrap();
        assert!((measure_moments(&m).n_mean - 1.5).abs() < 1e-15);
        let parts = m.pure_components();
        assert_eq!(parts.len(), 2);
        assert!((parts.iter().map(|p| p.0).sum::<f64>() - 1.0).abs() < 1e-15);
        let c = TruncatedState::fock(0, 5).unwrap();
        assert!(TruncatedState::mixture(&[(0.5, &a), (0.5, &c)]).is_err());
    }

    #[test]
    fn unphysical_states_are_flagged() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.2, 0.0);
        m[(1, 1)] = Complex64::new(-0.2, 0.0);
        let s = TruncatedState::from_matrix(m, 0.0).unwrap();
        assert!(matches!(
            s.check_physical(1e-12),
            Err(OracleError::Unphysical { check: "positivity", .. })
        ));
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        let s = TruncatedState::from_matrix(m, 0.0).unwrap();
        assert!(matches!(
            s.check_physical(1e-12),
            Err(OracleError::Unphysical { check: "hermiticity", .. })
        ));
    }

    #[test]
    fn product_dense_form() {
        let a = TruncatedState::fock(1, 3).unwrap();
        let b = TruncatedState::fock(2, 3).unwrap();
        let two = TwoModeState::product(&a, &b).unwrap();
        let dense = two.to_dense();
        assert_eq!(dense[(5, 5)], Complex64::new(1.0, 0.0));
        assert!((two.trace() - 1.0).abs() < 1e-15);
        assert_eq!(two.total_photon_mean(), 3.0);
        assert_eq!(two.clipped_sector_weight(), 1.0);
    }
}
