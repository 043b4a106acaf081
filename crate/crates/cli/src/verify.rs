//! The `verify` command: runs every identity and property of the operator
//! and determinant layers on the configured basis/state as named checks with
//! explicit residuals and thresholds.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use euler_spectra::fredholm::{contour_count, det2, det_at, log_deriv_mu, Rect};
use euler_spectra::grid::ModeBasis;
use euler_spectra::operators::{self, DispersionParam};
use euler_spectra::{Complex64, SeededRng, SteadyState};

use crate::CliError;

const IDENTITY_TOL: f64 = 1e-12;
const SPECTRAL_TOL: f64 = 1e-8;
const EQUIVALENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn check(name: &str, residual: f64, threshold: f64) -> CheckReport {
    CheckReport {
        name: name.to_string(),
        residual,
        threshold,
        pass: residual <= threshold,
    }
}

fn max_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Worst distance from each eigenvalue to the conjugate of its nearest
/// partner, relative to the eigenvalue scale.
fn conjugation_defect(eigs: &[Complex64]) -> f64 {
    eigs.iter()
        .map(|e| {
            let nearest = eigs
                .iter()
                .map(|f| (f.conj() - e).norm())
                .fold(f64::INFINITY, f64::min);
            nearest / e.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}

pub fn run_all(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    seed: u64,
) -> Result<Vec<CheckReport>, CliError> {
    let dim = basis.len();
    let eye = DMatrix::<Complex64>::identity(dim, dim);
    let lap = operators::minus_laplacian(basis);
    let mut out = Vec::new();

    // streamline derivative: skew-adjointness and imaginary spectrum
    let l0 = operators::streamline_derivative(basis, state)?;
    out.push(check(
        "l0_skew_adjoint",
        max_norm(&(l0.entries() + l0.entries().adjoint())),
        0.0,
    ));
    let l0_scale = l0.norms().two_norm.max(1.0);
    let l0_re = l0
        .eig()?
        .eigenvalues
        .iter()
        .map(|e| e.re.abs())
        .fold(0.0, f64::max);
    out.push(check("l0_spectrum_imaginary", l0_re / l0_scale, 1e-10));

    // resolvent bound at the three reference parameters
    let mut excess = 0.0f64;
    for lambda in [c(0.1, 0.0), c(0.5, 2.0), c(3.0, -1.0)] {
        let r = operators::resolvent(basis, state, lambda)?;
        let bound = 1.0 / lambda.re.abs();
        excess = excess.max((r.norms().two_norm - bound) / bound);
    }
    out.push(check("resolvent_bound", excess.max(0.0), 1e-10));

    // kernel projection identities
    let p0 = operators::kernel_projection(basis, state)?;
    out.push(check(
        "projection_idempotent",
        max_norm(&(p0.entries() * p0.entries() - p0.entries())),
        0.0,
    ));
    out.push(check(
        "projection_hermitian",
        max_norm(&(p0.entries().adjoint() - p0.entries())),
        0.0,
    ));
    out.push(check(
        "projection_annihilates_l0",
        max_norm(&(l0.entries() * p0.entries())),
        0.0,
    ));

    // the two defining forms of the dispersion and Birman-Schwinger operators
    let lambda0 = c(0.7, 0.0);
    let mu0 = c(-1.0, 0.0);
    let a = operators::dispersion(basis, state, lambda0)?;
    let a_alt = operators::dispersion_streamline_form(basis, state, lambda0)?;
    out.push(check("dispersion_forms_agree", a.max_norm_diff(&a_alt), IDENTITY_TOL));
    let k = operators::birman_schwinger(basis, state, lambda0, mu0)?;
    let k_alt = operators::birman_schwinger_streamline_form(basis, state, lambda0, mu0)?;
    out.push(check("bs_forms_agree", k.max_norm_diff(&k_alt), IDENTITY_TOL));

    // exact factorizations over a seeded parameter grid
    let mut rng = SeededRng::new(seed);
    let mut dispersion_resid = 0.0f64;
    let mut limit_resid = 0.0f64;
    let mut vorticity_resid = 0.0f64;
    let lvor = operators::vorticity_operator(basis, state)?;
    for _ in 0..3 {
        let lambda = c(0.05 + 2.0 * (rng.next_f64() + 1.0), rng.next_f64());
        let mu = c(4.0 * rng.next_f64(), rng.next_f64());
        let a = operators::dispersion(basis, state, lambda)?;
        let kk = operators::birman_schwinger(basis, state, lambda, mu)?;
        let lhs = a.entries() - &eye * mu;
        let rhs = (&eye - kk.entries()) * (lap.entries() - &eye * mu);
        dispersion_resid = dispersion_resid.max(max_norm(&(lhs - rhs)));

        let a0 = operators::dispersion_limit(basis, state)?;
        let k0 = operators::birman_schwinger_limit(basis, state, mu)?;
        let lhs = a0.entries() - &eye * mu;
        let rhs = (&eye - k0.entries()) * (lap.entries() - &eye * mu);
        limit_resid = limit_resid.max(max_norm(&(lhs - rhs)));

        let kt = operators::birman_schwinger_vorticity(basis, state, lambda)?;
        let lhs = &eye * lambda - lvor.entries();
        let rhs = (&eye - kt.entries()) * (&eye * lambda - l0.entries());
        vorticity_resid = vorticity_resid.max(max_norm(&(lhs - rhs)));
    }
    out.push(check("dispersion_factorization", dispersion_resid, IDENTITY_TOL));
    out.push(check("limit_factorization", limit_resid, IDENTITY_TOL));
    out.push(check("vorticity_factorization", vorticity_resid, IDENTITY_TOL));

    // conjugation closure of the spectra at real lambda
    let a_half = operators::dispersion(basis, state, c(0.5, 0.0))?;
    out.push(check(
        "dispersion_conjugation_closed",
        conjugation_defect(&a_half.eig()?.eigenvalues),
        SPECTRAL_TOL,
    ));
    let k_half = operators::birman_schwinger(basis, state, c(0.5, 0.0), c(0.0, 0.0))?;
    out.push(check(
        "bs_conjugation_closed",
        conjugation_defect(&k_half.eig()?.eigenvalues),
        SPECTRAL_TOL,
    ));

    // det2 against the direct product formula
    let d = det2(&k)?;
    let product = d
        .kappas
        .iter()
        .map(|&kp| (c(1.0, 0.0) - kp) * kp.exp())
        .fold(c(1.0, 0.0), |acc, f| acc * f);
    let product_resid = if d.zero_to_precision {
        0.0
    } else {
        (d.value - product).norm() / product.norm().max(1e-300)
    };
    out.push(check("det2_product_formula", product_resid, SPECTRAL_TOL));

    // D real on the real lambda axis
    let mut imag_part = 0.0f64;
    for t in 0..8 {
        let lambda = 0.05 + 2.0 * t as f64 / 7.0;
        let d = det_at(basis, state, DispersionParam::Lambda(c(lambda, 0.0)), c(0.0, 0.0))?.value;
        imag_part = imag_part.max(d.im.abs() / d.norm().max(1e-300));
    }
    out.push(check("det_real_on_real_lambda", imag_part, SPECTRAL_TOL));

    // Birman-Schwinger equivalence: eigenvalues (off the Laplacian spectrum)
    // are determinant zeros, small against the median grid value
    let param = DispersionParam::Lambda(c(0.5, 0.0));
    let eigs = a_half.eig()?.eigenvalues;
    let span = state.gprime_sup_norm().max(4.0);
    let mut reference: Vec<f64> = (0..32)
        .map(|t| {
            let mu = c(-span + 2.0 * span * t as f64 / 31.0, 0.4);
            det_at(basis, state, param, mu).map(|d| d.value.norm())
        })
        .collect::<Result<_, _>>()?;
    reference.sort_by(f64::total_cmp);
    let median = reference[reference.len() / 2].max(1e-300);
    let off_laplacian = |mu: Complex64| {
        (0..dim).all(|i| {
            let d = basis.laplacian_symbol(i);
            (mu - c(d, 0.0)).norm() > 1e-6 * d.max(1.0)
        })
    };
    let mut equivalence = 0.0f64;
    for &mu in eigs.iter().filter(|&&mu| off_laplacian(mu)).take(5) {
        equivalence = equivalence.max(det_at(basis, state, param, mu)?.value.norm() / median);
    }
    out.push(check("bs_equivalence_det_zero", equivalence, EQUIVALENCE_TOL));

    // contour count over an eigensolve-derived rectangle
    out.push(contour_check(basis, state, param, &eigs)?);

    // positivity of the dispersion operator at large lambda
    let big = 10.0 * state.gprime_sup_norm();
    let a_big = operators::dispersion(basis, state, c(big, 0.0))?;
    let min_re = a_big
        .eig()?
        .eigenvalues
        .iter()
        .map(|e| e.re)
        .fold(f64::INFINITY, f64::min);
    out.push(check("large_lambda_positive", (-min_re).max(0.0), 0.0));

    // lambda -> 0+ monotonicity on this basis: the resolvent drift toward
    // the kernel projection and the Hilbert-Schmidt distance K_lambda - K_0
    // both decrease strictly along a decreasing lambda sequence (their
    // terminal plateaus are gated by the `limits` command, not here)
    let phi = operators::SpectralVector::random_seeded(basis.clone(), seed);
    let p0 = operators::kernel_projection(basis, state)?;
    let k0 = operators::birman_schwinger_limit(basis, state, mu0)?;
    let mut proj_seq = Vec::new();
    let mut bs_seq = Vec::new();
    for lambda in [1.0, 0.1, 0.01, 0.001] {
        let lc = c(lambda, 0.0);
        let r = operators::resolvent(basis, state, lc)?;
        proj_seq.push(((r.entries() * lc - p0.entries()) * phi.coeffs()).norm());
        let k = operators::birman_schwinger(basis, state, lc, mu0)?;
        bs_seq.push((k.entries() - k0.entries()).norm());
    }
    let monotone_defect = |seq: &[f64]| {
        seq.windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .fold(0.0, f64::max)
    };
    out.push(check("resolvent_limit_monotone", monotone_defect(&proj_seq), 0.0));
    out.push(check("bs_limit_monotone", monotone_defect(&bs_seq), 0.0));

    // trace formula against central finite differences
    let mut fd_defect = 0.0f64;
    for _ in 0..3 {
        let mu = c(
            -0.35 * span - 0.15 * span * rng.next_f64(),
            0.5 * rng.next_f64(),
        );
        let analytic = log_deriv_mu(basis, state, param, mu)?;
        let h = 1e-5;
        let log_d = |mu: Complex64| -> Result<Complex64, CliError> {
            let d = det_at(basis, state, param, mu)?;
            Ok(Complex64::new(d.log_modulus, d.phase))
        };
        let fd = (log_d(mu + c(h, 0.0))? - log_d(mu - c(h, 0.0))?) / c(2.0 * h, 0.0);
        fd_defect = fd_defect.max((analytic - fd).norm() / analytic.norm().max(1e-300));
    }
    out.push(check("logderiv_matches_finite_difference", fd_defect, EQUIVALENCE_TOL));

    Ok(out)
}

/// Builds a rectangle around the lowest well-separated group of eigenvalues
/// and compares the argument-principle count with the eigensolve count.
fn contour_check(
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
    param: DispersionParam,
    eigs: &[Complex64],
) -> Result<CheckReport, CliError> {
    let mut by_re: Vec<Complex64> = eigs.to_vec();
    by_re.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut cut_index = by_re.len() - 1;
    for i in 0..by_re.len() - 1 {
        if by_re[i + 1].re - by_re[i].re > 0.5 {
            cut_index = i;
            break;
        }
    }
    let group = &by_re[..=cut_index];
    let height = group.iter().map(|e| e.im.abs()).fold(0.0f64, f64::max) + 1.0;
    let right = if cut_index + 1 < by_re.len() {
        0.5 * (by_re[cut_index].re + by_re[cut_index + 1].re)
    } else {
        by_re[cut_index].re + 1.0
    };
    let rect = Rect::new(by_re[0].re - 1.0, right, -height, height)
        .map_err(|e| CliError::Module(e.to_string()))?;
    let expected = eigs
        .iter()
        .filter(|e| e.re > rect.re_min && e.re < rect.re_max && e.im > rect.im_min && e.im < rect.im_max)
        .count();
    let report = contour_count(basis, state, param, rect)?;
    let defect = (report.winding as f64 - expected as f64).abs();
    Ok(check("contour_matches_eigensolve", defect, 0.0))
}
