//! Shear steady states of the 2D Euler equations.
//!
//! A shear state has velocity `u0 = (f(y), 0)`, stream function `psi0(y)` and
//! vorticity `omega0(y) = -psi0''(y)`, all stored as trigonometric
//! coefficient lists. The structural hypothesis `omega0 = g(psi0)` enters only
//! through the multiplier `g'(psi0(y))`, kept as a cosine series in `y`; its
//! consistency with the other fields is checked through the identity
//! `omega0'(y) = g'(psi0(y)) psi0'(y)` on a fine grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SteadyStateError {
    #[error("base wavenumber m must be at least 2, got {0}")]
    BaseWavenumberTooSmall(i32),
    #[error("coefficient lists must be finite, found {0}")]
    NonFiniteCoefficient(f64),
    #[error("gprime_sup_norm must be nonnegative and finite, got {0}")]
    BadSupNorm(f64),
}

/// A shear equilibrium, immutable once built.
///
/// All series are indexed by harmonic: `f(y) = sum_q u_profile[q] cos(q y)`,
/// `psi0(y) = sum_q stream[q] sin(q y)`, and so on. Sine storage makes the
/// zero space average of the vorticity structural.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Base wavenumber of the profile (the `m` of `cos(m y)` for the built-in
    /// family); subspace bases must match it.
    m: i32,
    /// Cosine coefficients of the velocity profile `f(y)`.
    u_profile: Vec<f64>,
    /// Sine coefficients of the stream function `psi0`.
    stream: Vec<f64>,
    /// Sine coefficients of the vorticity `omega0`.
    vorticity: Vec<f64>,
    /// Cosine coefficients of `y -> g'(psi0(y))`.
    gprime: Vec<f64>,
    /// Upper bound for `sup_y |g'(psi0(y))|`, used by the lambda scanner.
    gprime_sup_norm: f64,
}

impl SteadyState {
    /// Builds a state from explicit coefficient lists. Only structural
    /// validity is enforced here; run [`SteadyState::check_equilibrium`] to
    /// bound the consistency residual of hand-made states.
    pub fn new(
        m: i32,
        u_profile: Vec<f64>,
        stream: Vec<f64>,
        vorticity: Vec<f64>,
        gprime: Vec<f64>,
        gprime_sup_norm: f64,
    ) -> Result<Self, SteadyStateError> {
        if m < 2 {
            return Err(SteadyStateError::BaseWavenumberTooSmall(m));
        }
        for &c in u_profile
            .iter()
            .chain(&stream)
            .chain(&vorticity)
            .chain(&gprime)
        {
            if !c.is_finite() {
                return Err(SteadyStateError::NonFiniteCoefficient(c));
            }
        }
        if !gprime_sup_norm.is_finite() || gprime_sup_norm < 0.0 {
            return Err(SteadyStateError::BadSupNorm(gprime_sup_norm));
        }
        Ok(Self {
            m,
            u_profile,
            stream,
            vorticity,
            gprime,
            gprime_sup_norm,
        })
    }

    /// The single-mode shear family `u0 = (cos(m y), 0)`: stream function
    /// `sin(m y)/m`, vorticity `m sin(m y)`, and constant multiplier
    /// `g' = m^2`.
    pub fn single_mode_shear(m: i32) -> Result<Self, SteadyStateError> {
        if m < 2 {
            return Err(SteadyStateError::BaseWavenumberTooSmall(m));
        }
        let mu = m as usize;
        let mut u_profile = vec![0.0; mu + 1];
        u_profile[mu] = 1.0;
        let mut stream = vec![0.0; mu + 1];
        stream[mu] = 1.0 / m as f64;
        let mut vorticity = vec![0.0; mu + 1];
        vorticity[mu] = m as f64;
        let gprime = vec![(m * m) as f64];
        Self::new(m, u_profile, stream, vorticity, gprime, (m * m) as f64)
    }

    pub fn base_wavenumber(&self) -> i32 {
        self.m
    }

    pub fn u_profile_coeffs(&self) -> &[f64] {
        &self.u_profile
    }

    pub fn stream_coeffs(&self) -> &[f64] {
        &self.stream
    }

    pub fn vorticity_coeffs(&self) -> &[f64] {
        &self.vorticity
    }

    pub fn gprime_coeffs(&self) -> &[f64] {
        &self.gprime
    }

    pub fn gprime_sup_norm(&self) -> f64 {
        self.gprime_sup_norm
    }

    /// Highest harmonic appearing in any coefficient list.
    pub fn max_harmonic(&self) -> usize {
        [&self.u_profile, &self.stream, &self.vorticity, &self.gprime]
            .iter()
            .map(|c| {
                c.iter()
                    .rposition(|&x| x != 0.0)
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// Max-norm residual of `omega0'(y) - g'(psi0(y)) psi0'(y)` over an
    /// equispaced grid on `[0, 2pi)`. Zero (to round-off) exactly when the
    /// stored multiplier is consistent with the stored stream/vorticity pair.
    ///
    /// `quadrature_points` must be at least four times the highest harmonic.
    pub fn check_equilibrium(&self, quadrature_points: usize) -> f64 {
        assert!(
            quadrature_points >= 4 * self.max_harmonic().max(1),
            "quadrature grid too coarse for the stored harmonics"
        );
        let mut residual: f64 = 0.0;
        for i in 0..quadrature_points {
            let y = 2.0 * std::f64::consts::PI * i as f64 / quadrature_points as f64;
            let dvort = eval_sine_derivative(&self.vorticity, y);
            let dstream = eval_sine_derivative(&self.stream, y);
            let gp = eval_cosine(&self.gprime, y);
            residual = residual.max((dvort - gp * dstream).abs());
        }
        residual
    }

    /// Evaluates `g'(psi0(y))` pointwise from the cosine series.
    pub fn gprime_at(&self, y: f64) -> f64 {
        eval_cosine(&self.gprime, y)
    }
}

/// `sum_q c[q] cos(q y)`.
pub fn eval_cosine(coeffs: &[f64], y: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(q, &c)| c * (q as f64 * y).cos())
        .sum()
}

/// `sum_q c[q] sin(q y)`.
pub fn eval_sine(coeffs: &[f64], y: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(q, &c)| c * (q as f64 * y).sin())
        .sum()
}

/// Derivative of a sine series: `sum_q q c[q] cos(q y)`.
fn eval_sine_derivative(coeffs: &[f64], y: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(q, &c)| q as f64 * c * (q as f64 * y).cos())
        .sum()
}
