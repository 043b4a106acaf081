//! Cross-module invariants: exact matrix factorizations, resolvent bounds,
//! spectral symmetries, and the Birman-Schwinger equivalence, exercised over
//! randomized parameters.

use std::sync::Arc;

use euler_spectra::fredholm::{contour_count, det_at};
use euler_spectra::grid::{build_basis, ModeBasis, Truncation};
use euler_spectra::operators::{self, DispersionParam};
use euler_spectra::{Complex64, Rect, SeededRng, SteadyState};

use nalgebra::DMatrix;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn subspace(m: i32, j: i32, k: i32, p_max: i32) -> Arc<ModeBasis> {
    Arc::new(build_basis(Truncation::Subspace { m, j, k, p_max }).unwrap())
}

fn full(n1: i32, n2: i32) -> Arc<ModeBasis> {
    Arc::new(build_basis(Truncation::Full2d { n1, n2 }).unwrap())
}

fn max_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Admissible random subspace triples: m >= 3, 1 <= j <= floor(m/2),
/// excluding j = m/2 for even m.
fn subspace_params() -> impl Strategy<Value = (i32, i32, i32, i32)> {
    (3i32..9, 1i32..4, 1i32..7, 2i32..7).prop_filter("valid residue", |&(m, j, _, _)| {
        j <= m / 2 && !(m % 2 == 0 && j == m / 2)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dispersion_factorization_exact((m, j, k, p) in subspace_params(), seed in 0u64..500) {
        let mut rng = SeededRng::new(seed);
        let basis = subspace(m, j, k, p);
        let state = SteadyState::single_mode_shear(m).unwrap();
        let lambda = c(0.05 + 2.0 * (rng.next_f64() + 1.0), rng.next_f64());
        let mu = c(4.0 * rng.next_f64(), rng.next_f64());
        let dim = basis.len();
        let eye = DMatrix::<Complex64>::identity(dim, dim);

        let a = operators::dispersion(&basis, &state, lambda).unwrap();
        let kk = operators::birman_schwinger(&basis, &state, lambda, mu).unwrap();
        let lap = operators::minus_laplacian(&basis);
        let lhs = a.entries() - &eye * mu;
        let rhs = (&eye - kk.entries()) * (lap.entries() - &eye * mu);
        prop_assert!(max_norm(&(lhs - rhs)) <= 1e-12);

        // the two defining forms of A and K agree
        let a2 = operators::dispersion_streamline_form(&basis, &state, lambda).unwrap();
        prop_assert!(a.max_norm_diff(&a2) <= 1e-12);
        let k2 = operators::birman_schwinger_streamline_form(&basis, &state, lambda, mu).unwrap();
        prop_assert!(kk.max_norm_diff(&k2) <= 1e-12);
    }

    #[test]
    fn vorticity_factorization_exact((m, j, k, p) in subspace_params(), seed in 0u64..500) {
        let mut rng = SeededRng::new(seed);
        let basis = subspace(m, j, k, p);
        let state = SteadyState::single_mode_shear(m).unwrap();
        let lambda = c(0.05 + 2.0 * (rng.next_f64() + 1.0), 0.5 * rng.next_f64());
        let dim = basis.len();
        let eye = DMatrix::<Complex64>::identity(dim, dim);

        let lvor = operators::vorticity_operator(&basis, &state).unwrap();
        let l0 = operators::streamline_derivative(&basis, &state).unwrap();
        let kt = operators::birman_schwinger_vorticity(&basis, &state, lambda).unwrap();
        let lhs = &eye * lambda - lvor.entries();
        let rhs = (&eye - kt.entries()) * (&eye * lambda - l0.entries());
        prop_assert!(max_norm(&(lhs - rhs)) <= 1e-12);
    }

    #[test]
    fn resolvent_bound_holds((m, j, k, p) in subspace_params(), seed in 0u64..500) {
        let mut rng = SeededRng::new(seed);
        let basis = subspace(m, j, k, p);
        let state = SteadyState::single_mode_shear(m).unwrap();
        let re = 0.02 + 3.0 * (rng.next_f64() + 1.0);
        let lambda = c(if seed % 2 == 0 { re } else { -re }, 3.0 * rng.next_f64());
        let r = operators::resolvent(&basis, &state, lambda).unwrap();
        prop_assert!(r.norms().two_norm <= (1.0 + 1e-10) / lambda.re.abs());
    }

    #[test]
    fn streamline_spectrum_imaginary((m, j, k, p) in subspace_params()) {
        let basis = subspace(m, j, k, p);
        let state = SteadyState::single_mode_shear(m).unwrap();
        let l0 = operators::streamline_derivative(&basis, &state).unwrap();
        let scale = l0.norms().two_norm;
        for e in l0.eig().unwrap().eigenvalues {
            prop_assert!(e.re.abs() <= 1e-10 * scale.max(1.0));
        }
    }
}

#[test]
fn projection_identities_on_full_basis() {
    let basis = full(4, 4);
    let state = SteadyState::single_mode_shear(3).unwrap();
    let p0 = operators::kernel_projection(&basis, &state).unwrap();
    let l0 = operators::streamline_derivative(&basis, &state).unwrap();
    let idempotent = p0.entries() * p0.entries() - p0.entries();
    assert_eq!(max_norm(&idempotent), 0.0);
    let hermitian = p0.entries().adjoint() - p0.entries();
    assert_eq!(max_norm(&hermitian), 0.0);
    let annihilated = l0.entries() * p0.entries();
    assert_eq!(max_norm(&annihilated), 0.0);
}

#[test]
fn large_lambda_dispersion_is_positive() {
    for (basis, state) in [
        (subspace(4, 1, 3, 12), SteadyState::single_mode_shear(4).unwrap()),
        (full(5, 5), SteadyState::single_mode_shear(4).unwrap()),
    ] {
        let lambda = 10.0 * state.gprime_sup_norm();
        let a = operators::dispersion(&basis, &state, c(lambda, 0.0)).unwrap();
        let min_re = a
            .eig()
            .unwrap()
            .eigenvalues
            .iter()
            .map(|e| e.re)
            .fold(f64::INFINITY, f64::min);
        assert!(min_re > 0.0, "min Re sigma(A_lambda) = {min_re}");
    }
}

// Every eigenvalue of the truncated dispersion operator off the Laplacian
// spectrum is a zero of D, small against the determinant's typical size.
#[test]
fn birman_schwinger_equivalence() {
    let basis = subspace(4, 1, 3, 16);
    let state = SteadyState::single_mode_shear(4).unwrap();
    let off_laplacian = |mu: Complex64| {
        (0..basis.len()).all(|i| {
            let d = basis.laplacian_symbol(i);
            (mu - c(d, 0.0)).norm() > 1e-6 * d.max(1.0)
        })
    };
    for param in [DispersionParam::Lambda(c(0.5, 0.0)), DispersionParam::Limit] {
        let a = operators::dispersion_at(&basis, &state, param).unwrap();
        let eigs = a.eig().unwrap().eigenvalues;
        let mut reference: Vec<f64> = (0..48)
            .map(|t| {
                let mu = c(-9.0 + 18.0 * t as f64 / 47.0, 0.4);
                det_at(&basis, &state, param, mu).unwrap().value.norm()
            })
            .collect();
        reference.sort_by(f64::total_cmp);
        let median = reference[reference.len() / 2];
        // the equivalence speaks about eigenvalues off the truncated
        // Laplacian spectrum; on the limit family the eigenvalue 18 sits
        // exactly on it (n=5 eigenvalue versus n=-3 Laplacian point)
        let mut checked = 0;
        for &mu in eigs.iter().filter(|&&mu| off_laplacian(mu)).take(6) {
            let d = det_at(&basis, &state, param, mu).unwrap().value.norm();
            assert!(
                d <= 1e-6 * median,
                "param {param:?}: |D| = {d:.3e} at eigenvalue {mu}, median {median:.3e}"
            );
            checked += 1;
        }
        assert!(checked >= 5);
    }
}

#[test]
fn contour_count_matches_eigensolve_count() {
    let basis = subspace(4, 1, 3, 10);
    let state = SteadyState::single_mode_shear(4).unwrap();
    let param = DispersionParam::Lambda(c(0.8, 0.0));
    let a = operators::dispersion_at(&basis, &state, param).unwrap();
    let eigs = a.eig().unwrap().eigenvalues;
    for rect in [
        Rect::new(-8.5, -0.5, -2.0, 2.0).unwrap(),
        Rect::new(-8.5, 3.3, -2.0, 2.0).unwrap(),
        Rect::new(0.5, 27.0, -3.0, 3.0).unwrap(),
    ] {
        let inside = eigs
            .iter()
            .filter(|e| {
                e.re > rect.re_min && e.re < rect.re_max && e.im > rect.im_min && e.im < rect.im_max
            })
            .count();
        let report = contour_count(&basis, &state, param, rect).unwrap();
        assert_eq!(report.winding as usize, inside, "rect {rect:?}");
    }
}

#[test]
fn determinant_real_on_real_lambda() {
    let basis = subspace(4, 1, 3, 12);
    let state = SteadyState::single_mode_shear(4).unwrap();
    for t in 0..24 {
        let lambda = 0.05 + 3.0 * t as f64 / 23.0;
        let d = det_at(
            &basis,
            &state,
            DispersionParam::Lambda(c(lambda, 0.0)),
            c(0.0, 0.0),
        )
        .unwrap()
        .value;
        assert!(d.im.abs() <= 1e-8 * d.norm().max(1e-12), "lambda {lambda}: {d}");
    }
}

// Hilbert-Schmidt convergence of K_lambda -> K_0 with the matching
// determinant continuity, on the invariant subspace.
#[test]
fn hs_convergence_drives_determinant_convergence() {
    let basis = subspace(4, 1, 3, 10);
    let state = SteadyState::single_mode_shear(4).unwrap();
    let mu = c(-1.0, 0.0);
    let k0 = operators::birman_schwinger_limit(&basis, &state, mu).unwrap();
    let d0 = det_at(&basis, &state, DispersionParam::Limit, mu).unwrap().value;
    let mut k_dist = Vec::new();
    let mut d_dist = Vec::new();
    for lambda in [1.0, 0.1, 0.01, 0.001] {
        let k = operators::birman_schwinger(&basis, &state, c(lambda, 0.0), mu).unwrap();
        k_dist.push((k.entries() - k0.entries()).norm());
        let d = det_at(&basis, &state, DispersionParam::Lambda(c(lambda, 0.0)), mu)
            .unwrap()
            .value;
        d_dist.push((d - d0).norm());
    }
    assert!(k_dist.windows(2).all(|w| w[0] > w[1]), "K distances {k_dist:?}");
    // continuity of det2 in the Hilbert-Schmidt norm: the determinant gap is
    // controlled once the operator gap is small
    assert!(d_dist.last().unwrap() < &d_dist[0], "D distances {d_dist:?}");
}

// Exercises the eigensolver across the block-repeated non-normal operators
// of a full 2D basis (the structure that can stall a plain QR shift
// strategy and trips the seeded-similarity fallback).
#[test]
fn eigensolve_handles_degenerate_full2d_operators() {
    let basis = full(6, 6);
    let state = SteadyState::single_mode_shear(4).unwrap();
    for t in 0..16 {
        let mu = c(-9.0 + 18.0 * t as f64 / 15.0, 0.4);
        let k = operators::birman_schwinger(&basis, &state, c(0.5, 0.0), mu).unwrap();
        let r = k.eig().unwrap();
        assert!(r.backward_error <= 1e-10, "mu {mu}: {}", r.backward_error);
    }
}

// Three-way agreement on the second closed-form unstable case: the scan
// root, the dense vorticity eigensolve, and the dispersion kernel.
#[test]
fn cross_validation_second_unstable_case() {
    let basis = subspace(7, 2, 6, 24);
    let state = SteadyState::single_mode_shear(7).unwrap();
    let report = euler_spectra::cross_validate(&basis, &state, 1e-6).unwrap();
    assert!(report.ok, "max mismatch {}", report.max_mismatch);
    assert_eq!(report.unstable_eigenvalues.len(), 1);
    assert_eq!(report.scan_roots.len(), 1);
}

// Strong convergence of lambda (lambda - L0)^{-1} toward the kernel
// projection on the full 2D grid. The distances decrease strictly, but they
// plateau at the overlap of the test vector with the alternating-sign chain
// vectors that the symmetric truncation window adds to the null space of the
// truncated L0 (one per nonzero x-wavenumber); the continuum operator has no
// such kernel, so the plateau is a pure truncation parity artifact and does
// not shrink with lambda.
#[test]
fn strong_resolvent_convergence_full2d_plateau() {
    let basis = full(8, 8);
    let state = SteadyState::single_mode_shear(4).unwrap();
    let phi = operators::SpectralVector::random_seeded(basis.clone(), euler_spectra::DEFAULT_SEED);
    let p0 = operators::kernel_projection(&basis, &state).unwrap();
    let mut distances = Vec::new();
    for lambda in [1.0, 0.1, 0.01, 0.001] {
        let r = operators::resolvent(&basis, &state, c(lambda, 0.0)).unwrap();
        let drift = (r.entries() * c(lambda, 0.0) - p0.entries()) * phi.coeffs();
        distances.push(drift.norm());
    }
    assert!(
        distances.windows(2).all(|w| w[0] > w[1]),
        "distances {distances:?}"
    );
    // regression band for the parity-artifact plateau (~0.22 * ||phi||)
    let plateau = distances.last().unwrap() / phi.norm();
    assert!(
        (0.1..0.35).contains(&plateau),
        "plateau fraction {plateau} drifted from the recorded artifact level"
    );
}
