//! Dense truncated matrices for every operator of the problem.
//!
//! Composite operators are always assembled from factor matrices at one fixed
//! truncation, never from re-truncated continuum products. That makes the
//! factorization identities
//!
//! ```text
//! A_lambda - mu = (I - K_lambda(mu)) (-Delta - mu)
//! A_0      - mu = (I - K_0(mu))      (-Delta - mu)
//! lambda - L_vor = (I - Ktilde_lambda(0)) (lambda - L0)
//! ```
//!
//! hold to round-off on every basis, and pushes all discretization error into
//! fidelity to the continuum, which the refinement studies assess separately.
//!
//! The only simplification used in assembly is the exact resolvent identity
//! `lambda (lambda - L0)^{-1} = I + L0 (lambda - L0)^{-1}`; commutator-based
//! rewrites are avoided because truncation breaks the commutation of the
//! multiplier and `L0` at boundary modes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::grid::{ModeBasis, Truncation};
use crate::linalg::{self, EigenResult, LinalgError, MatrixNorms};
use crate::steady::SteadyState;
use crate::{Complex64, SeededRng};

/// Relative slack for deciding that mu sits on the truncated Laplacian
/// spectrum.
const MU_SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("basis has base wavenumber m={basis_m} but the steady state has m={state_m}")]
    MismatchedBaseWavenumber { basis_m: i32, state_m: i32 },
    #[error("harmonic {harmonic} of the state does not preserve the sine lattice (must be a multiple of m={m})")]
    IncompatibleHarmonic { harmonic: usize, m: i32 },
    #[error("spectral parameter lambda={0} has zero real part; the resolvent of L0 needs Re(lambda) != 0")]
    LambdaOnImaginaryAxis(Complex64),
    #[error("mu={mu} coincides with the truncated Laplacian eigenvalue {eigenvalue} at mode {mode}")]
    MuOnLaplacianSpectrum {
        mu: Complex64,
        eigenvalue: f64,
        mode: String,
    },
    #[error("linear algebra failure: {0}")]
    Linalg(#[from] LinalgError),
}

/// Dense complex Galerkin image of an operator over a fixed basis.
#[derive(Clone, Debug)]
pub struct SpectralMatrix {
    basis: Arc<ModeBasis>,
    entries: DMatrix<Complex64>,
}

impl SpectralMatrix {
    pub fn new(basis: Arc<ModeBasis>, entries: DMatrix<Complex64>) -> Self {
        assert_eq!(entries.nrows(), entries.ncols(), "operator matrices are square");
        assert_eq!(entries.nrows(), basis.len(), "dimension must equal basis size");
        Self { basis, entries }
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn eig(&self) -> Result<EigenResult, LinalgError> {
        linalg::eig(&self.entries)
    }

    pub fn norms(&self) -> MatrixNorms {
        linalg::norms(&self.entries)
    }

    pub fn solve_matrix(&self, rhs: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>, LinalgError> {
        linalg::solve(&self.entries, rhs)
    }

    /// Max-norm of the difference, the residual used by all identity checks.
    pub fn max_norm_diff(&self, other: &SpectralMatrix) -> f64 {
        (&self.entries - &other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Coefficient vector over a basis.
#[derive(Clone, Debug)]
pub struct SpectralVector {
    basis: Arc<ModeBasis>,
    coeffs: DVector<Complex64>,
}

impl SpectralVector {
    pub fn new(basis: Arc<ModeBasis>, coeffs: DVector<Complex64>) -> Self {
        assert_eq!(coeffs.len(), basis.len(), "length must equal basis size");
        Self { basis, coeffs }
    }

    /// Deterministic pseudo-random vector for convergence studies.
    pub fn random_seeded(basis: Arc<ModeBasis>, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        let coeffs = DVector::from_fn(basis.len(), |_, _| rng.next_complex());
        Self { basis, coeffs }
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &DVector<Complex64> {
        &self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }
}

/// Which member of the dispersion/Birman-Schwinger family an evaluation
/// refers to: the lambda -> 0+ limit built from the kernel projection, or the
/// operator at a spectral parameter with nonzero real part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum DispersionParam {
    Limit,
    Lambda(Complex64),
}

impl std::fmt::Display for DispersionParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DispersionParam::Limit => write!(f, "limit"),
            DispersionParam::Lambda(l) => write!(f, "lambda={l}"),
        }
    }
}

fn validate_compat(basis: &ModeBasis, state: &SteadyState) -> Result<(), OperatorError> {
    if let Truncation::Subspace { m, .. } = basis.truncation() {
        if state.base_wavenumber() != m {
            return Err(OperatorError::MismatchedBaseWavenumber {
                basis_m: m,
                state_m: state.base_wavenumber(),
            });
        }
        for coeffs in [state.u_profile_coeffs(), state.gprime_coeffs()] {
            for (q, &c) in coeffs.iter().enumerate() {
                if c != 0.0 && q != 0 && (q as i32) % m != 0 {
                    return Err(OperatorError::IncompatibleHarmonic { harmonic: q, m });
                }
            }
        }
    }
    Ok(())
}

fn require_nonimaginary(lambda: Complex64) -> Result<(), OperatorError> {
    if lambda.re == 0.0 {
        return Err(OperatorError::LambdaOnImaginaryAxis(lambda));
    }
    Ok(())
}

fn zero(basis: &Arc<ModeBasis>) -> DMatrix<Complex64> {
    DMatrix::zeros(basis.len(), basis.len())
}

/// The negative Laplacian: diagonal with the mode symbols `|k|^2` or
/// `n_p^2 + k^2`.
pub fn minus_laplacian(basis: &Arc<ModeBasis>) -> SpectralMatrix {
    let mut m = zero(basis);
    for i in 0..basis.len() {
        m[(i, i)] = Complex64::new(basis.laplacian_symbol(i), 0.0);
    }
    SpectralMatrix::new(basis.clone(), m)
}

/// Adds the coupling pattern of multiplication by `sum_q coeffs[q] cos(q y)`,
/// scaled per column by `col_factor`. Couplings that leave the truncation are
/// dropped.
fn add_cosine_multiplier(
    basis: &ModeBasis,
    coeffs: &[f64],
    col_factor: impl Fn(usize) -> Complex64,
    out: &mut DMatrix<Complex64>,
) {
    for col in 0..basis.len() {
        let factor = col_factor(col);
        if factor == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (q, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if q == 0 {
                out[(col, col)] += factor * c;
            } else {
                for step in [q as i32, -(q as i32)] {
                    if let Some(row) = basis.shifted(col, step) {
                        out[(row, col)] += factor * (0.5 * c);
                    }
                }
            }
        }
    }
}

/// The streamline-derivative operator `L0 = -f(y) d/dx` of a shear state:
/// each cosine harmonic `c_q` of `f` couples a mode to its `y`-shifts by
/// `+-q` with entry `-i k1 c_q / 2`. Exactly anti-Hermitian by the symmetric
/// shift structure.
pub fn streamline_derivative(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
) -> Result<SpectralMatrix, OperatorError> {
    validate_compat(basis, state)?;
    let mut m = zero(basis);
    add_cosine_multiplier(
        basis,
        state.u_profile_coeffs(),
        |col| Complex64::new(0.0, -(basis.x_wavenumber(col) as f64)),
        &mut m,
    );
    Ok(SpectralMatrix::new(basis.clone(), m))
}

/// Multiplication by `g'(psi0(y))`: banded convolution in the y-wavenumber by
/// the cosine coefficients of the multiplier.
pub fn gprime_multiplier(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
) -> Result<SpectralMatrix, OperatorError> {
    validate_compat(basis, state)?;
    let mut m = zero(basis);
    add_cosine_multiplier(
        basis,
        state.gprime_coeffs(),
        |_| Complex64::new(1.0, 0.0),
        &mut m,
    );
    Ok(SpectralMatrix::new(basis.clone(), m))
}

/// Resolvent `(lambda - L0)^{-1}` by dense solve against the identity.
pub fn resolvent(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    lambda: Complex64,
) -> Result<SpectralMatrix, OperatorError> {
    require_nonimaginary(lambda)?;
    let l0 = streamline_derivative(basis, state)?;
    let shifted = DMatrix::identity(basis.len(), basis.len()) * lambda - l0.entries();
    // L0 is exactly anti-Hermitian, so lambda - L0 cannot be singular for
    // Re(lambda) != 0; a failure here is an internal error.
    let inv = linalg::solve(&shifted, &DMatrix::identity(basis.len(), basis.len()))?;
    Ok(SpectralMatrix::new(basis.clone(), inv))
}

/// Orthogonal projection onto the kernel of the continuum streamline
/// derivative: the x-independent modes of a full 2D basis; the zero matrix on
/// a subspace basis (k >= 1).
pub fn kernel_projection(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
) -> Result<SpectralMatrix, OperatorError> {
    validate_compat(basis, state)?;
    let mut m = zero(basis);
    for i in 0..basis.len() {
        if basis.is_mean_flow_mode(i) {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(SpectralMatrix::new(basis.clone(), m))
}

/// Lin's dispersion operator
/// `A_lambda = -Delta - g' + g' lambda (lambda - L0)^{-1}`.
pub fn dispersion(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    lambda: Complex64,
) -> Result<SpectralMatrix, OperatorError> {
    let lap = minus_laplacian(basis);
    let g = gprime_multiplier(basis, state)?;
    let r = resolvent(basis, state, lambda)?;
    let entries = lap.entries() - g.entries() + g.entries() * (r.entries() * lambda);
    Ok(SpectralMatrix::new(basis.clone(), entries))
}

/// The equivalent first form `A_lambda = -Delta + g' L0 (lambda - L0)^{-1}`;
/// agrees with [`dispersion`] to round-off through the resolvent identity.
pub fn dispersion_streamline_form(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    lambda: Complex64,
) -> Result<SpectralMatrix, OperatorError> {
    let lap = minus_laplacian(basis);
    let g = gprime_multiplier(basis, state)?;
    let l0 = streamline_derivative(basis, state)?;
    let r = resolvent(basis, state, lambda)?;
    let entries = lap.entries() + g.entries() * l0.entries() * r.entries();
    Ok(SpectralMatrix::new(basis.clone(), entries))
}

/// The lambda -> 0+ limit `A_0 = -Delta - g' + g' P_0`. Hermitian for shear
/// states: the multiplier preserves the x-wavenumber, so it commutes with the
/// mean-flow projection exactly, truncation included.
pub fn dispersion_limit(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
) -> Result<SpectralMatrix, OperatorError> {
    let lap = minus_laplacian(basis);
    let g = gprime_multiplier(basis, state)?;
    let p0 = kernel_projection(basis, state)?;
    let entries = lap.entries() - g.entries() + g.entries() * p0.entries();
    Ok(SpectralMatrix::new(basis.clone(), entries))
}

/// Dispatch between `A_lambda` and `A_0`.
pub fn dispersion_at(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    param: DispersionParam,
) -> Result<SpectralMatrix, OperatorError> {
    match param {
        DispersionParam::Limit => dispersion_limit(basis, state),
        DispersionParam::Lambda(l) => dispersion(basis, state, l),
    }
}

fn check_mu_off_laplacian(basis: &ModeBasis, mu: Complex64) -> Result<(), OperatorError> {
    for i in 0..basis.len() {
        let d = basis.laplacian_symbol(i);
        if (mu - Complex64::new(d, 0.0)).norm() <= MU_SINGULAR_TOL * d.max(1.0) {
            return Err(OperatorError::MuOnLaplacianSpectrum {
                mu,
                eigenvalue: d,
                mode: basis.label(i).to_string(),
            });
        }
    }
    Ok(())
}

/// Scales column `i` by `1 / (d_i - mu)`, the diagonal resolvent of the
/// truncated negative Laplacian.
fn apply_laplacian_resolvent(
    basis: &ModeBasis,
    mu: Complex64,
    m: &mut DMatrix<Complex64>,
) {
    for col in 0..basis.len() {
        let d = Complex64::new(basis.laplacian_symbol(col), 0.0) - mu;
        for row in 0..basis.len() {
            m[(row, col)] /= d;
        }
    }
}

/// Birman-Schwinger operator
/// `K_lambda(mu) = (g' - g' lambda (lambda - L0)^{-1}) (-Delta - mu)^{-1}`,
/// satisfying `A_lambda - mu = (I - K_lambda(mu)) (-Delta - mu)` exactly.
pub fn birman_schwinger(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    lambda: Complex64,
    mu: Complex64,
) -> Result<SpectralMatrix, OperatorError> {
    check_mu_off_laplacian(basis, mu)?;
    let g = gprime_multiplier(basis, state)?;
    let r = resolvent(basis, state, lambda)?;
    let mut entries = g.entries() - g.entries() * (r.entries() * lambda);
    apply_laplacian_resolvent(basis, mu, &mut entries);
    Ok(SpectralMatrix::new(basis.clone(), entries))
}

/// The equivalent form `K_lambda(mu) = -g' L0 (lambda-L0)^{-1} (-Delta-mu)^{-1}`.
pub fn birman_schwinger_streamline_form(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    lambda: Complex64,
    mu: Complex64,
) -> Result<SpectralMatrix, OperatorError> {
    check_mu_off_laplacian(basis, mu)?;
    let g = gprime_multiplier(basis, state)?;
    let l0 = streamline_derivative(basis, state)?;
    let r = resolvent(basis, state, lambda)?;
    let mut entries = -(g.entries() * l0.entries() * r.entries());
    apply_laplacian_resolvent(basis, mu, &mut entries);
    Ok(SpectralMatrix::new(basis.clone(), entries))
}

/// Limit family `K_0(mu) = (g' - g' P_0) (-Delta - mu)^{-1}`, satisfying
/// `A_0 - mu = (I - K_0(mu)) (-Delta - mu)` exactly.
pub fn birman_schwinger_limit(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    mu: Complex64,
) -> Result<SpectralMatrix, OperatorError> {
    check_mu_off_laplacian(basis, mu)?;
    let g = gprime_multiplier(basis, state)?;
    let p0 = kernel_projection(basis, state)?;
    let mut entries = g.entries() - g.entries() * p0.entries();
    apply_laplacian_resolvent(basis, mu, &mut entries);
    Ok(SpectralMatrix::new(basis.clone(), entries))
}

/// Dispatch between `K_lambda(mu)` and `K_0(mu)`.
pub fn birman_schwinger_at(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    param: DispersionParam,
    mu: Complex64,
) -> Result<SpectralMatrix, OperatorError> {
    match param {
        DispersionParam::Limit => birman_schwinger_limit(basis, state, mu),
        DispersionParam::Lambda(l) => birman_schwinger(basis, state, l, mu),
    }
}

/// The swapped-product Birman-Schwinger operator of the vorticity pencil,
/// `Ktilde_lambda(0) = g' L0 Delta^{-1} (lambda - L0)^{-1}`, with
/// `Delta^{-1} = -(-Delta)^{-1}`. It factorizes
/// `lambda - L_vor = (I - Ktilde_lambda(0)) (lambda - L0)` and shares its
/// nonzero spectrum with `K_lambda(0)`.
pub fn birman_schwinger_vorticity(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    lambda: Complex64,
) -> Result<SpectralMatrix, OperatorError> {
    let g = gprime_multiplier(basis, state)?;
    let l0 = streamline_derivative(basis, state)?;
    let r = resolvent(basis, state, lambda)?;
    let mut left = g.entries() * l0.entries();
    // right-multiply by Delta^{-1} = -diag(1/d_i)
    for col in 0..basis.len() {
        let d = Complex64::new(-basis.laplacian_symbol(col), 0.0);
        for row in 0..basis.len() {
            left[(row, col)] /= d;
        }
    }
    let entries = left * r.entries();
    Ok(SpectralMatrix::new(basis.clone(), entries))
}

/// The linearized vorticity operator `L_vor = L0 (I + g' Delta^{-1})`.
pub fn vorticity_operator(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
) -> Result<SpectralMatrix, OperatorError> {
    let l0 = streamline_derivative(basis, state)?;
    let g = gprime_multiplier(basis, state)?;
    let mut g_dinv = g.entries().clone();
    for col in 0..basis.len() {
        let d = Complex64::new(-basis.laplacian_symbol(col), 0.0);
        for row in 0..basis.len() {
            g_dinv[(row, col)] /= d;
        }
    }
    let entries = l0.entries() * (DMatrix::identity(basis.len(), basis.len()) + g_dinv);
    Ok(SpectralMatrix::new(basis.clone(), entries))
}
