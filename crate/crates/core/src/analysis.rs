//! Top-level procedures: the lambda-scan locating unstable eigenvalues of the
//! vorticity operator as zeros of `D(., 0)`, Lin's negative-eigenvalue
//! criterion on the limit dispersion operator, negative-count tracking in
//! lambda, lambda -> 0+ convergence studies, truncation refinement studies,
//! and cross-validation of every claim against direct dense eigensolves.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::fredholm::{self, contour_count, det_at, CountReport, FredholmError, Rect};
use crate::grid::{build_basis, GridError, ModeBasis, Truncation};
use crate::linalg::LinalgError;
use crate::operators::{self, DispersionParam, OperatorError, SpectralVector};
use crate::steady::SteadyState;
use crate::{Complex64, DEFAULT_SEED};

/// An eigenvalue of modulus below this fraction of the operator two-norm
/// counts as kernel.
pub const KERNEL_THRESHOLD_FACTOR: f64 = 1e-8;

/// Eigenvalues with imaginary part below this fraction of the operator
/// two-norm count as real for the negative-count bookkeeping.
pub const IMAG_TOL_FACTOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Fredholm(#[from] FredholmError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "the limit dispersion operator on a full 2D basis has structural kernel modes \
         (x-dependent modes with |k|^2 equal to the constant multiplier), so the \
         negative-eigenvalue criterion does not apply; use an invariant subspace basis \
         or pass the explicit full-basis override"
    )]
    FullBasisKernelObstruction,
    #[error("conjugation symmetry violated at lambda={lambda}: D={value} has relative imaginary part above tolerance")]
    ConjugationViolation { lambda: f64, value: Complex64 },
    #[error("the scan found no root to refine")]
    NoRootForRefinement,
}

/// Outcome of the negative-eigenvalue criterion on the limit dispersion
/// operator.
#[derive(Clone, Debug, Serialize)]
pub struct LinReport {
    /// Eigenvalues with real part below minus the kernel threshold.
    pub negative_count: usize,
    pub min_abs_eigenvalue: f64,
    pub has_kernel: bool,
    /// Negative count odd and no kernel: an unstable eigenvalue of the
    /// vorticity operator exists.
    pub criterion_fires: bool,
    /// Smallest few eigenvalues, ascending by real part.
    pub spectrum_head: Vec<Complex64>,
    pub kernel_threshold: f64,
}

/// Applies the negative-eigenvalue criterion to `A_0` on `basis`.
///
/// Full 2D bases are rejected unless `full_basis_override` is set: with a
/// constant multiplier the limit operator always has structural kernel modes
/// there, so the criterion cannot fire.
pub fn lin_check(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    full_basis_override: bool,
) -> Result<LinReport, AnalysisError> {
    if matches!(basis.truncation(), Truncation::Full2d { .. }) && !full_basis_override {
        return Err(AnalysisError::FullBasisKernelObstruction);
    }
    let a0 = operators::dispersion_limit(basis, state)?;
    let threshold = KERNEL_THRESHOLD_FACTOR * a0.norms().two_norm;
    let eigenvalues = a0.eig()?.eigenvalues;
    let negative_count = eigenvalues
        .iter()
        .filter(|e| e.re < -threshold)
        .count();
    let min_abs_eigenvalue = eigenvalues
        .iter()
        .map(|e| e.norm())
        .fold(f64::INFINITY, f64::min);
    let has_kernel = min_abs_eigenvalue < threshold;
    let head = eigenvalues.iter().take(6).copied().collect();
    Ok(LinReport {
        negative_count,
        min_abs_eigenvalue,
        has_kernel,
        criterion_fires: negative_count % 2 == 1 && !has_kernel,
        spectrum_head: head,
        kernel_threshold: threshold,
    })
}

/// The closed-form sufficient condition `m^2 - j^2 > k^2 > m^2 - (j-m)^2`
/// under which the limit operator on the `(k, j)` subspace has exactly one
/// negative eigenvalue and no kernel.
pub fn subspace_condition(m: i32, j: i32, k: i32) -> bool {
    let (m, j, k) = (i64::from(m), i64::from(j), i64::from(k));
    let k2 = k * k;
    m * m - j * j > k2 && k2 > m * m - (j - m) * (j - m)
}

/// Negative-eigenvalue bookkeeping of the dispersion operator at one lambda.
#[derive(Clone, Debug, Serialize)]
pub struct NegativeCountPoint {
    pub lambda: f64,
    /// Count of eigenvalues with `Re < -kernel_threshold` and
    /// `|Im| < imag_tol` from the dense eigensolve.
    pub eigensolve_count: usize,
    /// Zeros of `D(lambda, .)` in the thin rectangle around the negative
    /// real axis, by the argument principle. None when the lambda was
    /// skipped.
    pub winding_count: Option<u32>,
    pub rectangle: Option<Rect>,
    pub skipped: bool,
    pub skip_reason: Option<String>,
}

/// Tracks the number of negative eigenvalues of `A_lambda` along an
/// increasing positive lambda grid, cross-checked by an argument-principle
/// count over a thin rectangle hugging the negative real axis.
pub fn negative_count_vs_lambda(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    lambda_grid: &[f64],
) -> Result<Vec<NegativeCountPoint>, AnalysisError> {
    if lambda_grid.is_empty() || lambda_grid.iter().any(|&l| l <= 0.0) {
        return Err(AnalysisError::InvalidParameter(
            "lambda grid must be positive".into(),
        ));
    }
    if lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::InvalidParameter(
            "lambda grid must be strictly increasing".into(),
        ));
    }
    let mut points = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let param = DispersionParam::Lambda(Complex64::new(lambda, 0.0));
        let a = operators::dispersion_at(basis, state, param)?;
        let two_norm = a.norms().two_norm;
        let kernel_threshold = KERNEL_THRESHOLD_FACTOR * two_norm;
        let imag_tol = IMAG_TOL_FACTOR * two_norm;
        let eigenvalues = a.eig()?.eigenvalues;
        let negatives: Vec<Complex64> = eigenvalues
            .iter()
            .filter(|e| e.re < -kernel_threshold && e.im.abs() < imag_tol)
            .copied()
            .collect();
        let count = negatives.len();

        // Thin rectangle containing exactly the counted eigenvalues, with
        // clear boundary; shrink the half-height until that holds.
        let left = negatives
            .iter()
            .map(|e| e.re)
            .fold(-1.0f64, f64::min)
            - 1.0;
        let mut selected: Option<Rect> = None;
        let mut eps = 0.25f64;
        for _ in 0..10 {
            let rect = Rect::new(left, eps, -eps, eps)?;
            let clear = eigenvalues
                .iter()
                .all(|&e| rect.boundary_distance(e) > 1e-6);
            let inside = eigenvalues
                .iter()
                .filter(|&&e| {
                    e.re > rect.re_min
                        && e.re < rect.re_max
                        && e.im > rect.im_min
                        && e.im < rect.im_max
                })
                .count();
            if clear && inside == count {
                selected = Some(rect);
                break;
            }
            eps *= 0.5;
        }
        let point = match selected {
            None => NegativeCountPoint {
                lambda,
                eigensolve_count: count,
                winding_count: None,
                rectangle: None,
                skipped: true,
                skip_reason: Some("no admissible thin rectangle: spectrum too close to the contour".into()),
            },
            Some(rect) => match contour_count(basis, state, param, rect) {
                Ok(CountReport { winding, .. }) => NegativeCountPoint {
                    lambda,
                    eigensolve_count: count,
                    winding_count: Some(winding),
                    rectangle: Some(rect),
                    skipped: false,
                    skip_reason: None,
                },
                Err(
                    e @ (FredholmError::EigenvalueNearBoundary { .. }
                    | FredholmError::LaplacianNearBoundary { .. }
                    | FredholmError::QuadratureNotStable { .. }),
                ) => NegativeCountPoint {
                    lambda,
                    eigensolve_count: count,
                    winding_count: None,
                    rectangle: Some(rect),
                    skipped: true,
                    skip_reason: Some(e.to_string()),
                },
                Err(e) => return Err(e.into()),
            },
        };
        points.push(point);
    }
    Ok(points)
}

/// A located real zero of `D(., 0)`.
#[derive(Clone, Debug, Serialize)]
pub struct RootFinding {
    pub lambda_star: f64,
    /// `|D(lambda_star, 0)|`.
    pub residual: f64,
    pub bracket: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplexBoxCount {
    pub rect: Rect,
    pub winding: u32,
}

/// One grid evaluation of the scan.
#[derive(Clone, Debug, Serialize)]
pub struct ScanSample {
    pub lambda: f64,
    pub det: Complex64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub lambda_range: (f64, f64),
    pub grid_points: usize,
    pub roots: Vec<RootFinding>,
    /// Winding counts over upper-half-plane boxes; empty unless the complex
    /// sweep was requested.
    pub complex_boxes: Vec<ComplexBoxCount>,
    pub trace: Vec<ScanSample>,
}

#[derive(Clone, Debug)]
pub struct ScanOptions {
    pub lambda_range: (f64, f64),
    pub grid_points: usize,
    /// Bisection stops when the bracket is narrower than this.
    pub bracket_tol: f64,
    /// Grid values of `D` must be real up to this relative factor.
    pub imag_violation_factor: f64,
    /// Also sweep boxes in the upper half lambda-plane for nonreal zeros.
    pub complex_sweep: bool,
}

impl ScanOptions {
    /// Scan range `(0.01, 4 ||g'||_inf)` with 256 points: beyond it the
    /// dispersion operator is positive and `D(., 0)` has no zeros.
    pub fn default_for(state: &SteadyState) -> Self {
        Self {
            lambda_range: (0.01, 4.0 * state.gprime_sup_norm()),
            grid_points: 256,
            bracket_tol: 1e-10,
            imag_violation_factor: 1e-6,
            complex_sweep: false,
        }
    }
}

/// Scans `lambda -> D(lambda, 0)` over a real grid, brackets sign changes of
/// the (real) values and bisects them; every root is an unstable eigenvalue
/// of the truncated vorticity operator.
pub fn scan_unstable(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    options: &ScanOptions,
) -> Result<ScanReport, AnalysisError> {
    let (lo, hi) = options.lambda_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(AnalysisError::InvalidParameter(format!(
            "lambda range must satisfy 0 < min < max, got ({lo}, {hi})"
        )));
    }
    if options.grid_points < 2 {
        return Err(AnalysisError::InvalidParameter(
            "scan needs at least two grid points".into(),
        ));
    }

    let eval = |lambda: f64| -> Result<Complex64, AnalysisError> {
        Ok(det_at(
            basis,
            state,
            DispersionParam::Lambda(Complex64::new(lambda, 0.0)),
            Complex64::new(0.0, 0.0),
        )?
        .value)
    };

    let n = options.grid_points;
    let mut trace = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let det = eval(lambda)?;
        // D(lambda, 0) is real on the real axis by conjugation symmetry.
        if det.im.abs() > options.imag_violation_factor * det.norm() {
            return Err(AnalysisError::ConjugationViolation { lambda, value: det });
        }
        trace.push(ScanSample { lambda, det });
    }

    let mut roots = Vec::new();
    for w in trace.windows(2) {
        let (l0, d0) = (w[0].lambda, w[0].det.re);
        let (l1, d1) = (w[1].lambda, w[1].det.re);
        if d0 == 0.0 {
            // grid point sits on a zero; record it directly (the following
            // window will not re-trigger since the product is not negative)
            roots.push(RootFinding {
                lambda_star: l0,
                residual: 0.0,
                bracket: (l0, l0),
            });
            continue;
        }
        if d0 * d1 < 0.0 {
            let (mut a, mut b) = (l0, l1);
            let mut fa = d0;
            while b - a > options.bracket_tol {
                let mid = 0.5 * (a + b);
                let fm = eval(mid)?.re;
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fa * fm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            let lambda_star = 0.5 * (a + b);
            let residual = eval(lambda_star)?.norm();
            roots.push(RootFinding {
                lambda_star,
                residual,
                bracket: (a, b),
            });
        }
    }

    let mut complex_boxes = Vec::new();
    if options.complex_sweep {
        // Conjugation symmetry pairs nonreal zeros, so sweeping the upper
        // half plane suffices. A band over the real axis is excluded (real
        // zeros are the bisection's job), and the left edge keeps enough
        // distance from the imaginary axis that the eigenvalues of K, of
        // size up to ||g'||_inf ||L0|| / (d_min Re(lambda)), stay moderate:
        // |D| ~ e^kappa whirls too fast for phase sampling otherwise.
        let band = 0.05;
        let l0_norm = operators::streamline_derivative(basis, state)?
            .norms()
            .two_norm;
        let d_min = (0..basis.len())
            .map(|i| basis.laplacian_symbol(i))
            .fold(f64::INFINITY, f64::min);
        let kappa_cap = 50.0;
        let left = lo.max(state.gprime_sup_norm() * l0_norm / (d_min * kappa_cap));
        let boxes = 4;
        for b in 0..boxes {
            let re0 = left + (hi - left) * b as f64 / boxes as f64;
            let re1 = left + (hi - left) * (b + 1) as f64 / boxes as f64;
            let rect = Rect::new(re0, re1, band, hi.max(2.0 * band))?;
            if let Some(winding) = complex_winding(basis, state, rect)? {
                complex_boxes.push(ComplexBoxCount { rect, winding });
            }
        }
    }

    Ok(ScanReport {
        lambda_range: options.lambda_range,
        grid_points: n,
        roots,
        complex_boxes,
        trace,
    })
}

/// Winding number of `lambda -> D(lambda, 0)` around a box off the real
/// axis, by sampled phase accumulation along the boundary. Returns None when
/// the sampling cannot be stabilized (a zero too close to the boundary).
fn complex_winding(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    rect: Rect,
) -> Result<Option<u32>, AnalysisError> {
    let corners = [
        Complex64::new(rect.re_min, rect.im_min),
        Complex64::new(rect.re_max, rect.im_min),
        Complex64::new(rect.re_max, rect.im_max),
        Complex64::new(rect.re_min, rect.im_max),
    ];
    let eval = |z: Complex64| -> Result<Complex64, AnalysisError> {
        Ok(det_at(basis, state, DispersionParam::Lambda(z), Complex64::new(0.0, 0.0))?.value)
    };
    let mut per_edge = 16usize;
    for _ in 0..8 {
        let mut samples = Vec::with_capacity(4 * per_edge);
        for e in 0..4 {
            let z0 = corners[e];
            let z1 = corners[(e + 1) % 4];
            for t in 0..per_edge {
                samples.push(z0 + (z1 - z0) * (t as f64 / per_edge as f64));
            }
        }
        samples.push(samples[0]);
        let mut total = 0.0;
        let mut ok = true;
        let mut prev = eval(samples[0])?;
        if prev.norm() == 0.0 {
            return Ok(None);
        }
        for z in &samples[1..] {
            let cur = eval(*z)?;
            if cur.norm() == 0.0 {
                return Ok(None);
            }
            let step = (cur / prev).arg();
            if step.abs() >= std::f64::consts::FRAC_PI_2 {
                ok = false;
                break;
            }
            total += step;
            prev = cur;
        }
        if ok {
            let winding = total / (2.0 * std::f64::consts::PI);
            if (winding - winding.round()).abs() <= 0.25 && winding.round() >= 0.0 {
                return Ok(Some(winding.round() as u32));
            }
        }
        per_edge *= 2;
    }
    Ok(None)
}

/// Per-eigenvalue record of the three-way agreement check.
#[derive(Clone, Debug, Serialize)]
pub struct EigenvalueCheck {
    pub eigenvalue: Complex64,
    /// `|D(eigenvalue, 0)|`.
    pub det_residual: f64,
    /// `min |sigma(A_eigenvalue)| / ||A_eigenvalue||_2`.
    pub dispersion_kernel_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RootMatch {
    pub lambda_star: f64,
    pub nearest_vorticity_eigenvalue: Complex64,
    pub relative_mismatch: f64,
}

/// Three-way consistency report: unstable eigenvalues of the vorticity
/// operator, zeros of the determinant, and kernel of the dispersion operator.
#[derive(Clone, Debug, Serialize)]
pub struct CrossValidationReport {
    pub unstable_eigenvalues: Vec<Complex64>,
    pub eigenvalue_checks: Vec<EigenvalueCheck>,
    pub scan_roots: Vec<f64>,
    pub root_matches: Vec<RootMatch>,
    pub max_mismatch: f64,
    pub tolerance: f64,
    pub ok: bool,
}

/// Cross-validates the scan against the dense eigensolve oracle:
/// (a) every unstable eigenvalue of the vorticity operator is a zero of
/// `D(., 0)` and a kernel parameter of the dispersion operator, and
/// (b) every scan root is an unstable eigenvalue of the vorticity operator.
pub fn cross_validate(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    tol: f64,
) -> Result<CrossValidationReport, AnalysisError> {
    let lvor = operators::vorticity_operator(basis, state)?;
    let unstable: Vec<Complex64> = lvor
        .eig()?
        .eigenvalues
        .into_iter()
        .filter(|e| e.re > tol)
        .collect();

    let mut max_mismatch = 0.0f64;
    let mut eigenvalue_checks = Vec::with_capacity(unstable.len());
    for &ev in &unstable {
        let det_residual = det_at(basis, state, DispersionParam::Lambda(ev), Complex64::new(0.0, 0.0))?
            .value
            .norm();
        let a = operators::dispersion(basis, state, ev)?;
        let norm = a.norms().two_norm;
        let min_abs = a
            .eig()?
            .eigenvalues
            .iter()
            .map(|e| e.norm())
            .fold(f64::INFINITY, f64::min);
        let dispersion_kernel_residual = min_abs / norm.max(f64::MIN_POSITIVE);
        max_mismatch = max_mismatch.max(det_residual).max(dispersion_kernel_residual);
        eigenvalue_checks.push(EigenvalueCheck {
            eigenvalue: ev,
            det_residual,
            dispersion_kernel_residual,
        });
    }

    let scan = scan_unstable(basis, state, &ScanOptions::default_for(state))?;
    let mut root_matches = Vec::with_capacity(scan.roots.len());
    for root in &scan.roots {
        let target = Complex64::new(root.lambda_star, 0.0);
        let nearest = unstable
            .iter()
            .copied()
            .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
            .unwrap_or(Complex64::new(f64::INFINITY, 0.0));
        let relative_mismatch = (nearest - target).norm() / root.lambda_star.abs().max(f64::MIN_POSITIVE);
        max_mismatch = max_mismatch.max(relative_mismatch);
        root_matches.push(RootMatch {
            lambda_star: root.lambda_star,
            nearest_vorticity_eigenvalue: nearest,
            relative_mismatch,
        });
    }

    Ok(CrossValidationReport {
        unstable_eigenvalues: unstable,
        eigenvalue_checks,
        scan_roots: scan.roots.iter().map(|r| r.lambda_star).collect(),
        root_matches,
        max_mismatch,
        tolerance: tol,
        ok: max_mismatch <= tol,
    })
}

#[derive(Clone, Debug)]
pub struct LimitOptions {
    pub seed: u64,
    /// The final projection distance must drop below this fraction of
    /// `||phi||`.
    pub projection_final_fraction_max: f64,
    /// The final Hilbert-Schmidt distance must drop below this fraction of
    /// the initial one.
    pub bs_final_over_initial_max: f64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            projection_final_fraction_max: 0.01,
            bs_final_over_initial_max: 0.05,
        }
    }
}

/// Lambda -> 0+ convergence study.
#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub lambda_seq: Vec<f64>,
    pub mu: Complex64,
    pub phi_norm: f64,
    /// `||(lambda (lambda - L0)^{-1} - P0) phi||` per lambda.
    pub projection_distances: Vec<f64>,
    /// `||K_lambda(mu) - K_0(mu)||_F` per lambda.
    pub bs_distances: Vec<f64>,
    /// `|D(lambda, mu) - D(0, mu)|` per lambda (informational).
    pub det_distances: Vec<f64>,
    pub projection_monotone: bool,
    pub bs_monotone: bool,
    pub projection_final_fraction: f64,
    pub bs_final_over_initial: f64,
    pub projection_final_ok: bool,
    pub bs_final_ok: bool,
    pub ok: bool,
}

/// Tracks the strong resolvent limit and the Hilbert-Schmidt limit along a
/// decreasing lambda sequence at fixed mu, against a seeded random vector.
pub fn limit_studies(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    lambda_seq: &[f64],
    mu: Complex64,
    options: &LimitOptions,
) -> Result<LimitReport, AnalysisError> {
    if lambda_seq.is_empty() || lambda_seq.iter().any(|&l| l <= 0.0) {
        return Err(AnalysisError::InvalidParameter(
            "lambda sequence must be positive".into(),
        ));
    }
    if lambda_seq.windows(2).any(|w| w[0] <= w[1]) {
        return Err(AnalysisError::InvalidParameter(
            "lambda sequence must be strictly decreasing".into(),
        ));
    }
    let phi = SpectralVector::random_seeded(basis.clone(), options.seed);
    let phi_norm = phi.norm();
    let p0 = operators::kernel_projection(basis, state)?;
    let k0 = operators::birman_schwinger_limit(basis, state, mu)?;
    let d0 = fredholm::det_at(basis, state, DispersionParam::Limit, mu)?.value;

    let mut projection_distances = Vec::with_capacity(lambda_seq.len());
    let mut bs_distances = Vec::with_capacity(lambda_seq.len());
    let mut det_distances = Vec::with_capacity(lambda_seq.len());
    for &lambda in lambda_seq {
        let lc = Complex64::new(lambda, 0.0);
        let r = operators::resolvent(basis, state, lc)?;
        let drift = (r.entries() * lc - p0.entries()) * phi.coeffs();
        projection_distances.push(drift.norm());
        let k = operators::birman_schwinger(basis, state, lc, mu)?;
        bs_distances.push((k.entries() - k0.entries()).norm());
        let d = fredholm::det_at(basis, state, DispersionParam::Lambda(lc), mu)?.value;
        det_distances.push((d - d0).norm());
    }

    let strictly_decreasing = |v: &[f64]| v.windows(2).all(|w| w[0] > w[1]);
    let projection_monotone = strictly_decreasing(&projection_distances);
    let bs_monotone = strictly_decreasing(&bs_distances);
    let projection_final_fraction = projection_distances.last().unwrap() / phi_norm;
    let bs_final_over_initial = bs_distances.last().unwrap() / bs_distances[0].max(f64::MIN_POSITIVE);
    let projection_final_ok = projection_final_fraction < options.projection_final_fraction_max;
    let bs_final_ok = bs_final_over_initial < options.bs_final_over_initial_max;
    Ok(LimitReport {
        lambda_seq: lambda_seq.to_vec(),
        mu,
        phi_norm,
        projection_distances,
        bs_distances,
        det_distances,
        projection_monotone,
        bs_monotone,
        projection_final_fraction,
        bs_final_over_initial,
        projection_final_ok,
        bs_final_ok,
        ok: projection_monotone && bs_monotone && projection_final_ok && bs_final_ok,
    })
}

/// What a refinement study recomputes at each truncation level.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum RefinementQuantity {
    /// First root of the scan.
    UnstableRoot,
    /// Negative count of the limit dispersion operator.
    NegativeCount,
    /// `D(lambda, mu)` at a fixed point.
    DetAt { lambda: Complex64, mu: Complex64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementLevel {
    pub truncation: Truncation,
    pub value: Complex64,
    /// `|v_i - v_{i-1}| / max(|v_i|, 1)`.
    pub relative_difference: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementReport {
    pub quantity: RefinementQuantity,
    pub levels: Vec<RefinementLevel>,
    pub final_difference: Option<f64>,
    pub converged: bool,
    pub verdict: String,
}

/// Recomputes a quantity along a strictly increasing truncation ladder and
/// reports successive relative differences. Convergence is declared when the
/// final difference drops below `tol`; a non-decreasing tail yields a
/// "not converged" verdict rather than an error.
pub fn refinement_study(
    state: &SteadyState,
    ladder: &[Truncation],
    quantity: RefinementQuantity,
    scan_options: Option<&ScanOptions>,
    tol: f64,
) -> Result<RefinementReport, AnalysisError> {
    if ladder.len() < 2 {
        return Err(AnalysisError::InvalidParameter(
            "refinement ladder needs at least two levels".into(),
        ));
    }
    if ladder.windows(2).any(|w| w[0].size() >= w[1].size()) {
        return Err(AnalysisError::InvalidParameter(
            "refinement ladder must be strictly increasing".into(),
        ));
    }

    let mut levels: Vec<RefinementLevel> = Vec::with_capacity(ladder.len());
    for &truncation in ladder {
        let basis = Arc::new(build_basis(truncation)?);
        let value = match quantity {
            RefinementQuantity::UnstableRoot => {
                let defaults = ScanOptions::default_for(state);
                let options = scan_options.unwrap_or(&defaults);
                let report = scan_unstable(&basis, state, options)?;
                let root = report
                    .roots
                    .first()
                    .ok_or(AnalysisError::NoRootForRefinement)?;
                Complex64::new(root.lambda_star, 0.0)
            }
            RefinementQuantity::NegativeCount => {
                let report = lin_check(&basis, state, true)?;
                Complex64::new(report.negative_count as f64, 0.0)
            }
            RefinementQuantity::DetAt { lambda, mu } => {
                det_at(&basis, state, DispersionParam::Lambda(lambda), mu)?.value
            }
        };
        let relative_difference = levels.last().map(|prev: &RefinementLevel| {
            (value - prev.value).norm() / value.norm().max(1.0)
        });
        levels.push(RefinementLevel {
            truncation,
            value,
            relative_difference,
        });
    }

    let diffs: Vec<f64> = levels
        .iter()
        .filter_map(|l| l.relative_difference)
        .collect();
    let final_difference = diffs.last().copied();
    let decreasing = diffs.windows(2).all(|w| w[1] <= w[0]);
    let converged = final_difference.map(|d| d < tol).unwrap_or(false) && decreasing;
    let verdict = if converged {
        "converged".to_string()
    } else if !decreasing {
        "not converged: successive differences are not decreasing".to_string()
    } else {
        "not converged: final difference above tolerance".to_string()
    };
    Ok(RefinementReport {
        quantity,
        levels,
        final_difference,
        converged,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subspace(m: i32, j: i32, k: i32, p_max: i32) -> Arc<ModeBasis> {
        Arc::new(
            build_basis(Truncation::Subspace { m, j, k, p_max }).unwrap(),
        )
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lin_check_fires_for_known_unstable_cases() {
        let s4 = SteadyState::single_mode_shear(4).unwrap();
        let r = lin_check(&subspace(4, 1, 3, 16), &s4, false).unwrap();
        assert_eq!(r.negative_count, 1);
        assert!(!r.has_kernel);
        assert!(r.criterion_fires);
        assert!((r.spectrum_head[0].re - (-6.0)).abs() <= 1e-10);

        let s7 = SteadyState::single_mode_shear(7).unwrap();
        let r = lin_check(&subspace(7, 2, 6, 16), &s7, false).unwrap();
        assert_eq!(r.negative_count, 1);
        assert!(r.criterion_fires);
    }

    #[test]
    fn lin_check_does_not_fire_for_stable_case() {
        let s4 = SteadyState::single_mode_shear(4).unwrap();
        let r = lin_check(&subspace(4, 1, 4, 16), &s4, false).unwrap();
        assert_eq!(r.negative_count, 0);
        assert!(!r.criterion_fires);
    }

    #[test]
    fn lin_check_rejects_full_basis_without_override() {
        let s = SteadyState::single_mode_shear(2).unwrap();
        let basis = Arc::new(build_basis(Truncation::Full2d { n1: 2, n2: 2 }).unwrap());
        assert!(matches!(
            lin_check(&basis, &s, false),
            Err(AnalysisError::FullBasisKernelObstruction)
        ));
        // with the override it reports the structural kernel
        let r = lin_check(&basis, &s, true).unwrap();
        assert!(r.has_kernel);
        assert!(!r.criterion_fires);
    }

    #[test]
    fn subspace_condition_examples() {
        assert!(subspace_condition(4, 1, 3)); // 15 > 9 > 7
        assert!(subspace_condition(7, 2, 6)); // 45 > 36 > 24
        assert!(!subspace_condition(4, 1, 4)); // 16 is not < 15
    }

    #[test]
    fn condition_implies_single_negative_eigenvalue() {
        // closed-form spectrum makes this exact for every admissible triple
        for m in 2..=8 {
            for j in 1..=(m / 2) {
                if m % 2 == 0 && j == m / 2 {
                    continue;
                }
                for k in 1..=(2 * m) {
                    if !subspace_condition(m, j, k) {
                        continue;
                    }
                    let s = SteadyState::single_mode_shear(m).unwrap();
                    let r = lin_check(&subspace(m, j, k, 12), &s, false).unwrap();
                    assert_eq!(r.negative_count, 1, "(m,j,k)=({m},{j},{k})");
                    assert!(r.criterion_fires);
                }
            }
        }
    }

    #[test]
    fn scan_finds_single_root_for_unstable_case() {
        let s = SteadyState::single_mode_shear(4).unwrap();
        let basis = subspace(4, 1, 3, 16);
        let report = scan_unstable(&basis, &s, &ScanOptions::default_for(&s)).unwrap();
        assert_eq!(report.roots.len(), 1);
        let root = &report.roots[0];
        assert!(root.residual <= 1e-6);
        // the root is the positive real eigenvalue of the vorticity operator
        let lvor = operators::vorticity_operator(&basis, &s).unwrap();
        let max_re = lvor
            .eig()
            .unwrap()
            .eigenvalues
            .iter()
            .map(|e| e.re)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((root.lambda_star - max_re).abs() <= 1e-6 * max_re);
    }

    #[test]
    fn scan_finds_no_root_for_stable_case() {
        let s = SteadyState::single_mode_shear(4).unwrap();
        let basis = subspace(4, 1, 4, 16);
        let report = scan_unstable(&basis, &s, &ScanOptions::default_for(&s)).unwrap();
        assert!(report.roots.is_empty());
    }

    #[test]
    fn scan_trivial_for_zero_multiplier() {
        // g' == 0 makes K vanish and D == 1 everywhere
        let s =
            SteadyState::new(3, vec![0.0, 0.0, 0.0, 1.0], vec![], vec![], vec![0.0], 0.0).unwrap();
        let basis = subspace(3, 1, 1, 8);
        let mut options = ScanOptions::default_for(&s);
        options.lambda_range = (0.01, 4.0);
        options.grid_points = 32;
        let report = scan_unstable(&basis, &s, &options).unwrap();
        assert!(report.roots.is_empty());
        assert!(report.trace.iter().all(|s| s.det == c(1.0, 0.0)));
    }

    #[test]
    fn complex_sweep_finds_no_nonreal_roots_here() {
        let s = SteadyState::single_mode_shear(4).unwrap();
        let basis = subspace(4, 1, 3, 8);
        let options = ScanOptions {
            lambda_range: (0.01, 8.0),
            grid_points: 64,
            bracket_tol: 1e-10,
            imag_violation_factor: 1e-6,
            complex_sweep: true,
        };
        let report = scan_unstable(&basis, &s, &options).unwrap();
        assert_eq!(report.roots.len(), 1);
        assert_eq!(report.complex_boxes.len(), 4);
        assert!(report.complex_boxes.iter().all(|b| b.winding == 0));
    }

    #[test]
    fn scan_rejects_bad_range() {
        let s = SteadyState::single_mode_shear(4).unwrap();
        let basis = subspace(4, 1, 3, 4);
        let mut options = ScanOptions::default_for(&s);
        options.lambda_range = (-1.0, 2.0);
        assert!(matches!(
            scan_unstable(&basis, &s, &options),
            Err(AnalysisError::InvalidParameter(_))
        ));
    }

    #[test]
    fn negative_count_tracks_lambda() {
        let s = SteadyState::single_mode_shear(4).unwrap();
        let basis = subspace(4, 1, 3, 16);
        let grid = [0.01, 1.0, 160.0];
        let points = negative_count_vs_lambda(&basis, &s, &grid).unwrap();
        assert_eq!(points[0].eigensolve_count, 1);
        assert_eq!(points.last().unwrap().eigensolve_count, 0);
        for p in &points {
            if let Some(w) = p.winding_count {
                assert_eq!(w as usize, p.eigensolve_count, "lambda={}", p.lambda);
            }
        }
    }

    #[test]
    fn limit_studies_sequences_decrease_on_subspace() {
        let s = SteadyState::single_mode_shear(4).unwrap();
        let basis = subspace(4, 1, 3, 8);
        let report = limit_studies(
            &basis,
            &s,
            &[1.0, 0.1, 0.01, 0.001],
            c(-1.0, 0.0),
            &LimitOptions::default(),
        )
        .unwrap();
        assert!(report.projection_monotone);
        assert!(report.bs_monotone);
        // On the invariant subspace the truncated streamline derivative has a
        // one-dimensional alternating-sign kernel chain (truncation parity
        // artifact), so both sequences plateau at its contribution instead
        // of decaying like lambda.
        assert!(report.projection_distances.last().unwrap() > &0.0);
    }

    #[test]
    fn limit_studies_zero_multiplier_trivial() {
        let s =
            SteadyState::new(3, vec![0.0, 0.0, 0.0, 1.0], vec![], vec![], vec![0.0], 0.0).unwrap();
        let basis = subspace(3, 1, 1, 6);
        let report = limit_studies(
            &basis,
            &s,
            &[1.0, 0.1, 0.01],
            c(-1.0, 0.0),
            &LimitOptions::default(),
        )
        .unwrap();
        assert!(report.bs_distances.iter().all(|&d| d == 0.0));
        assert!(report.det_distances.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn limit_studies_rejects_non_decreasing_sequence() {
        let s = SteadyState::single_mode_shear(4).unwrap();
        let basis = subspace(4, 1, 3, 4);
        assert!(matches!(
            limit_studies(&basis, &s, &[0.1, 1.0], c(-1.0, 0.0), &LimitOptions::default()),
            Err(AnalysisError::InvalidParameter(_))
        ));
    }

    #[test]
    fn refinement_negative_count_constant() {
        let s = SteadyState::single_mode_shear(4).unwrap();
        let ladder: Vec<Truncation> = [4, 8, 16]
            .iter()
            .map(|&p| Truncation::Subspace {
                m: 4,
                j: 1,
                k: 3,
                p_max: p,
            })
            .collect();
        let report =
            refinement_study(&s, &ladder, RefinementQuantity::NegativeCount, None, 1e-6).unwrap();
        assert!(report.converged);
        assert!(report
            .levels
            .iter()
            .all(|l| (l.value - c(1.0, 0.0)).norm() == 0.0));
    }

    #[test]
    fn refinement_det_value_is_cauchy() {
        let s = SteadyState::single_mode_shear(4).unwrap();
        let ladder: Vec<Truncation> = [8, 16, 32, 64]
            .iter()
            .map(|&p| Truncation::Subspace {
                m: 4,
                j: 1,
                k: 3,
                p_max: p,
            })
            .collect();
        let report = refinement_study(
            &s,
            &ladder,
            RefinementQuantity::DetAt {
                lambda: c(0.5, 0.0),
                mu: c(0.0, 0.0),
            },
            None,
            1e-6,
        )
        .unwrap();
        let diffs: Vec<f64> = report
            .levels
            .iter()
            .filter_map(|l| l.relative_difference)
            .collect();
        assert!(diffs.windows(2).all(|w| w[1] < w[0]), "diffs {diffs:?}");
    }

    #[test]
    fn refinement_rejects_non_increasing_ladder() {
        let s = SteadyState::single_mode_shear(4).unwrap();
        let ladder = [
            Truncation::Subspace { m: 4, j: 1, k: 3, p_max: 8 },
            Truncation::Subspace { m: 4, j: 1, k: 3, p_max: 8 },
        ];
        assert!(matches!(
            refinement_study(&s, &ladder, RefinementQuantity::NegativeCount, None, 1e-6),
            Err(AnalysisError::InvalidParameter(_))
        ));
    }
}
