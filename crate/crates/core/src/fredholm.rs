//! 2-modified Fredholm determinants `D(lambda, mu) = det2(I - K)`, their
//! logarithmic mu-derivative through the trace formula, and argument-principle
//! zero counting over rectangles.
//!
//! `log det2` is accumulated as `sum[log(1 - kappa) + kappa]` with the
//! principal branch per term; point evaluations never unwind a global phase.
//! All zero counting goes through the derivative integral, which is
//! branch-free.

use std::sync::Arc;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::grid::ModeBasis;
use crate::linalg::{self, LinalgError};
use crate::operators::{self, DispersionParam, OperatorError, SpectralMatrix};
use crate::steady::SteadyState;
use crate::Complex64;

/// |kappa - 1| below this counts as a determinant zero to precision.
const KAPPA_ONE_TOL: f64 = 1e-12;

/// Minimum allowed distance from dispersion and Laplacian eigenvalues to the
/// rectangle boundary.
const BOUNDARY_CLEARANCE: f64 = 1e-6;

/// Successive winding estimates must agree this closely.
const WINDING_STABILITY: f64 = 0.1;

/// A winding estimate must sit this close to an integer to be accepted.
const WINDING_INTEGER_TOL: f64 = 0.25;

const MAX_REFINEMENT_LEVELS: u32 = 8;

const GAUSS_POINTS: usize = 16;

#[derive(Debug, Error)]
pub enum FredholmError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Linalg(LinalgError),
    #[error("mu={mu} is an eigenvalue of the dispersion operator ({param}): I - K is singular")]
    MuIsDispersionEigenvalue { param: String, mu: Complex64 },
    #[error("dispersion eigenvalue {value} lies within {distance:.3e} of the rectangle boundary")]
    EigenvalueNearBoundary { value: Complex64, distance: f64 },
    #[error("truncated Laplacian eigenvalue {value} lies within {distance:.3e} of the rectangle boundary")]
    LaplacianNearBoundary { value: f64, distance: f64 },
    #[error("winding quadrature did not stabilize to an integer after {levels} refinements (estimate {estimate}, last delta {last_delta})")]
    QuadratureNotStable {
        estimate: f64,
        last_delta: f64,
        levels: u32,
    },
    #[error("invalid rectangle: {0}")]
    InvalidRectangle(String),
}

impl From<LinalgError> for FredholmError {
    fn from(e: LinalgError) -> Self {
        FredholmError::Linalg(e)
    }
}

/// Value and stable log-decomposition of a 2-modified determinant, together
/// with the spectrum of `K` it was formed from.
#[derive(Clone, Debug, Serialize)]
pub struct DetResult {
    pub value: Complex64,
    /// `log |value|`; `-inf` when a factor vanished to precision.
    pub log_modulus: f64,
    /// Accumulated principal phases of the factors, in radians (not reduced
    /// mod 2 pi).
    pub phase: f64,
    /// Eigenvalues of `K` in descending modulus, the summation order used.
    pub kappas: Vec<Complex64>,
    /// Set when some kappa is within 1e-12 of 1: the determinant is zero to
    /// precision.
    pub zero_to_precision: bool,
}

/// `det2(I - K) = prod (1 - kappa_n) e^{kappa_n}` over the eigenvalues of
/// `K`, evaluated through principal logarithms in descending `|kappa|` order.
pub fn det2(k: &SpectralMatrix) -> Result<DetResult, FredholmError> {
    det2_of_entries(k.entries())
}

pub(crate) fn det2_of_entries(k: &DMatrix<Complex64>) -> Result<DetResult, FredholmError> {
    let mut kappas = linalg::eig(k)?.eigenvalues;
    kappas.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
    let one = Complex64::new(1.0, 0.0);
    if kappas.iter().any(|k| (k - one).norm() <= KAPPA_ONE_TOL) {
        return Ok(DetResult {
            value: Complex64::new(0.0, 0.0),
            log_modulus: f64::NEG_INFINITY,
            phase: 0.0,
            kappas,
            zero_to_precision: true,
        });
    }
    let log_sum: Complex64 = kappas.iter().map(|&kp| (one - kp).ln() + kp).sum();
    Ok(DetResult {
        value: log_sum.exp(),
        log_modulus: log_sum.re,
        phase: log_sum.im,
        kappas,
        zero_to_precision: false,
    })
}

/// Evaluates `D(lambda, mu)` for the chosen family.
pub fn det_at(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    param: DispersionParam,
    mu: Complex64,
) -> Result<DetResult, FredholmError> {
    let k = operators::birman_schwinger_at(basis, state, param, mu)?;
    det2(&k)
}

/// `d/dmu log D(lambda, mu) = -Tr((I-K)^{-1} K dK/dmu)` with
/// `dK/dmu = K (-Delta - mu)^{-1}`.
pub fn log_deriv_mu(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    param: DispersionParam,
    mu: Complex64,
) -> Result<Complex64, FredholmError> {
    let k = operators::birman_schwinger_at(basis, state, param, mu)?;
    let symbols: Vec<f64> = (0..basis.len()).map(|i| basis.laplacian_symbol(i)).collect();
    trace_formula(k.entries(), &symbols, mu).map_err(|e| match e {
        FredholmError::Linalg(LinalgError::Singular)
        | FredholmError::Linalg(LinalgError::IllConditioned { .. }) => {
            FredholmError::MuIsDispersionEigenvalue {
                param: param.to_string(),
                mu,
            }
        }
        other => other,
    })
}

/// Core of the trace formula: `-Tr((I-K)^{-1} K^2 Dmu^{-1})` where `Dmu^{-1}`
/// is diagonal with entries `1 / (symbols[i] - mu)`.
fn trace_formula(
    k: &DMatrix<Complex64>,
    symbols: &[f64],
    mu: Complex64,
) -> Result<Complex64, FredholmError> {
    let dim = k.nrows();
    // dK/dmu = K * (-Delta - mu)^{-1}, column scaling
    let mut dk = k.clone();
    for col in 0..dim {
        let d = Complex64::new(symbols[col], 0.0) - mu;
        for row in 0..dim {
            dk[(row, col)] /= d;
        }
    }
    let product = k * &dk;
    let eye = DMatrix::<Complex64>::identity(dim, dim);
    let resolved = linalg::solve(&(&eye - k), &product)?;
    Ok(-resolved.trace())
}

/// Closed rectangle in the mu-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, FredholmError> {
        if !(re_min < re_max && im_min < im_max)
            || ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite())
        {
            return Err(FredholmError::InvalidRectangle(format!(
                "[{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// Distance from a point to the boundary curve of the rectangle.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let inside = z.re >= self.re_min
            && z.re <= self.re_max
            && z.im >= self.im_min
            && z.im <= self.im_max;
        if inside {
            (z.re - self.re_min)
                .min(self.re_max - z.re)
                .min(z.im - self.im_min)
                .min(self.im_max - z.im)
        } else {
            let dre = (self.re_min - z.re).max(0.0).max(z.re - self.re_max);
            let dim = (self.im_min - z.im).max(0.0).max(z.im - self.im_max);
            (dre * dre + dim * dim).sqrt()
        }
    }

    /// Counterclockwise corner sequence.
    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

/// Result of an argument-principle count over a rectangle.
#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub rectangle: Rect,
    /// Number of dispersion eigenvalues off the Laplacian spectrum
    /// (equivalently, zeros of `D`) inside the rectangle, with multiplicity.
    pub winding: u32,
    /// Pole-adjusted quadrature value the integer was rounded from; within
    /// 0.25 of the integer by construction.
    pub quadrature_estimate: f64,
    /// Gauss points per edge at the accepted refinement level.
    pub edge_samples: u32,
}

/// Zeros of `D(param, .)` inside `rect`, counted with multiplicity by the
/// argument principle. The integral of the logarithmic derivative is taken
/// with composite 16-point Gauss-Legendre panels per edge, doubling the panel
/// count until two successive winding estimates agree within 0.1 and the
/// value sits within 0.25 of an integer.
///
/// At finite truncation `D` is meromorphic: every truncated Laplacian
/// eigenvalue inside the rectangle is a pole of the resolvent factor of `K`,
/// and the raw winding integral counts zeros minus poles. The report adds the
/// exact interior pole count back (minus zero/pole cancellations), so
/// `winding` is the eigenvalue count the rectangle lemma speaks about.
pub fn contour_count(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    param: DispersionParam,
    rect: Rect,
) -> Result<CountReport, FredholmError> {
    // Precondition: the boundary stays clear of the dispersion spectrum and
    // of the truncated Laplacian spectrum.
    let a = operators::dispersion_at(basis, state, param)?;
    let dispersion_eigs = a.eig()?.eigenvalues;
    for &value in &dispersion_eigs {
        let distance = rect.boundary_distance(value);
        if distance <= BOUNDARY_CLEARANCE {
            return Err(FredholmError::EigenvalueNearBoundary { value, distance });
        }
    }
    let mut interior_poles = 0i64;
    for i in 0..basis.len() {
        let value = basis.laplacian_symbol(i);
        let z = Complex64::new(value, 0.0);
        let distance = rect.boundary_distance(z);
        if distance <= BOUNDARY_CLEARANCE {
            return Err(FredholmError::LaplacianNearBoundary { value, distance });
        }
        let inside = value > rect.re_min
            && value < rect.re_max
            && rect.im_min < 0.0
            && rect.im_max > 0.0;
        if inside {
            // A dispersion eigenvalue sitting exactly on the Laplacian point
            // cancels the pole (and is not a zero of D).
            let cancelled = dispersion_eigs
                .iter()
                .any(|e| (e - z).norm() <= 1e-9 * value.max(1.0));
            if !cancelled {
                interior_poles += 1;
            }
        }
    }

    let corners = rect.corners();
    let mut previous: Option<f64> = None;
    let mut last_delta = f64::INFINITY;
    let mut estimate = f64::NAN;
    for level in 0..=MAX_REFINEMENT_LEVELS {
        let panels = 1usize << level;
        let mut integral = Complex64::new(0.0, 0.0);
        for e in 0..4 {
            let z0 = corners[e];
            let z1 = corners[(e + 1) % 4];
            integral += integrate_edge(basis, state, param, z0, z1, panels)?;
        }
        estimate = integral.im / (2.0 * std::f64::consts::PI) + interior_poles as f64;
        let closure_defect = integral.re.abs() / (2.0 * std::f64::consts::PI);
        if let Some(prev) = previous {
            last_delta = (estimate - prev).abs();
            let near_integer = (estimate - estimate.round()).abs() <= WINDING_INTEGER_TOL;
            if last_delta < WINDING_STABILITY
                && near_integer
                && closure_defect <= WINDING_INTEGER_TOL
                && estimate.round() >= 0.0
            {
                return Ok(CountReport {
                    rectangle: rect,
                    winding: estimate.round() as u32,
                    quadrature_estimate: estimate,
                    edge_samples: (panels * GAUSS_POINTS) as u32,
                });
            }
        }
        previous = Some(estimate);
    }
    Err(FredholmError::QuadratureNotStable {
        estimate,
        last_delta,
        levels: MAX_REFINEMENT_LEVELS,
    })
}

fn integrate_edge(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    param: DispersionParam,
    z0: Complex64,
    z1: Complex64,
    panels: usize,
) -> Result<Complex64, FredholmError> {
    let nodes = gauss_legendre_16();
    let direction = z1 - z0;
    let mut total = Complex64::new(0.0, 0.0);
    for panel in 0..panels {
        let t0 = panel as f64 / panels as f64;
        let t1 = (panel + 1) as f64 / panels as f64;
        let mid = 0.5 * (t0 + t1);
        let half = 0.5 * (t1 - t0);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(x, w) in nodes {
            let mu = z0 + direction * (mid + half * x);
            acc += log_deriv_mu(basis, state, param, mu)? * w;
        }
        total += acc * half;
    }
    Ok(total * direction)
}

/// 16-point Gauss-Legendre nodes and weights on [-1, 1], computed once by
/// Newton iteration on the Legendre recurrence.
fn gauss_legendre_16() -> &'static [(f64, f64); 16] {
    static NODES: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GAUSS_POINTS;
        let mut out = [(0.0, 0.0); 16];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            out[n - 1 - i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

/// Legendre polynomial and derivative at `x` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}
