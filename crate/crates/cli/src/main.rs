//! Command-line front end: wires TOML configs and flag overrides into the
//! analysis pipeline and emits machine-readable JSON/CSV reports.
//!
//! Exit codes: 0 success, 1 failed assertion or computation error, 2 config
//! error. Errors go to stderr as one JSON object per failure.

mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use euler_spectra::analysis::{
    cross_validate, lin_check, limit_studies, negative_count_vs_lambda, refinement_study,
    scan_unstable, AnalysisError, LimitOptions, RefinementQuantity, ScanOptions,
};
use euler_spectra::fredholm::{contour_count, det_at, FredholmError, Rect};
use euler_spectra::grid::{build_basis, ModeBasis, Truncation};
use euler_spectra::linalg::LinalgError;
use euler_spectra::operators::{self, DispersionParam, OperatorError, SpectralMatrix};
use euler_spectra::{Complex64, SteadyState};

use config::{LambdaSpec, Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Module(String),
    #[error("{0}")]
    Assertion(String),
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        CliError::Module(e.to_string())
    }
}
impl From<FredholmError> for CliError {
    fn from(e: FredholmError) -> Self {
        CliError::Module(e.to_string())
    }
}
impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Module(e.to_string())
    }
}
impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        CliError::Module(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "euler-spectra",
    version,
    about = "Unstable eigenvalues of the linearized 2D Euler equations via Birman-Schwinger determinants"
)]
struct Cli {
    /// TOML config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base wavenumber of the shear state u0 = (cos(m y), 0).
    #[arg(long, global = true)]
    m: Option<i32>,
    /// Sine-lattice residue of the invariant subspace.
    #[arg(long, global = true)]
    j: Option<i32>,
    /// x-wavenumber of the invariant subspace.
    #[arg(long, global = true)]
    k: Option<i32>,
    /// Truncation size: P for subspace bases, N1=N2=N for full 2D bases.
    #[arg(long, global = true)]
    trunc: Option<i32>,
    /// Full 2D x-truncation (overrides --trunc for N1).
    #[arg(long, global = true)]
    n1: Option<i32>,
    /// Full 2D y-truncation (overrides --trunc for N2).
    #[arg(long, global = true)]
    n2: Option<i32>,
    /// Basis family: subspace | full2d.
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    lambda_min: Option<f64>,
    #[arg(long, global = true)]
    lambda_max: Option<f64>,
    /// Scan grid points.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Tolerance (bisection bracket width / validation tolerance).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Spectral parameter for det/count/spectrum: a number or "limit".
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// mu parameter where one is needed (k-lambda spectrum, refine det).
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Rectangle reMin,reMax,imMin,imMax for count.
    #[arg(long, global = true, allow_hyphen_values = true)]
    rect: Option<String>,
    /// Operator name for spectrum.
    #[arg(long, global = true)]
    operator: Option<String>,
    /// Also dump the assembled matrix as CSV (spectrum command).
    #[arg(long, global = true)]
    dump_matrix: bool,
    /// Sweep upper-half-plane boxes for nonreal roots (scan command).
    #[arg(long, global = true)]
    complex: bool,
    /// Allow lin-check on a full 2D basis despite the kernel obstruction.
    #[arg(long, global = true)]
    allow_full2d: bool,
    /// Seed for the deterministic test vectors.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: $EULER_SPECTRA_OUT or ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated output formats (json,csv).
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Eigenvalues of a named operator at the given parameters.
    Spectrum,
    /// Evaluate D(lambda, mu) on a mu-grid.
    Det,
    /// Scan lambda -> D(lambda, 0) for unstable eigenvalues.
    Scan,
    /// Count determinant zeros in a rectangle by the argument principle.
    Count,
    /// Negative-eigenvalue instability criterion on the limit operator.
    LinCheck,
    /// Run the full identity/property suite on the configured operators.
    Verify,
    /// Cross-validate scan roots against the dense vorticity eigensolve.
    Validate,
    /// Lambda -> 0+ convergence study.
    Limits,
    /// Truncation refinement study.
    Refine,
}

#[derive(Serialize)]
struct StructuredError<'a> {
    kind: &'a str,
    error: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((summary, true)) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Ok((summary, false)) => {
            println!("{summary}");
            let err = StructuredError {
                kind: "assertion",
                error: summary.clone(),
            };
            eprintln!("{}", serde_json::to_string(&err).unwrap());
            ExitCode::from(1)
        }
        Err(e) => {
            let kind = match e {
                CliError::Config(_) => "config",
                CliError::Io(_) => "io",
                CliError::Module(_) => "module",
                CliError::Assertion(_) => "assertion",
            };
            let err = StructuredError {
                kind,
                error: e.to_string(),
            };
            eprintln!("{}", serde_json::to_string(&err).unwrap());
            match e {
                CliError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<(String, bool), CliError> {
    let file = match &cli.config {
        Some(path) => config::load_file(path)?,
        None => config::FileConfig::default(),
    };
    let overrides = Overrides {
        m: cli.m,
        j: cli.j,
        k: cli.k,
        trunc: cli.trunc,
        n1: cli.n1,
        n2: cli.n2,
        mode: cli.mode.clone(),
        lambda_min: cli.lambda_min,
        lambda_max: cli.lambda_max,
        grid: cli.grid,
        tol: cli.tol,
        lambda: cli.lambda.clone(),
        mu: cli.mu,
        rect: cli.rect.clone(),
        operator: cli.operator.clone(),
        dump_matrix: cli.dump_matrix,
        complex: cli.complex,
        allow_full2d: cli.allow_full2d,
        seed: cli.seed,
        out: cli.out.clone(),
        format: cli.format.clone(),
    };
    let cfg = RunConfig::resolve(file, &overrides)?;
    let basis = Arc::new(
        build_basis(cfg.truncation).map_err(|e| CliError::Config(e.to_string()))?,
    );
    output::ensure_dir(&cfg.out_dir)?;

    match cli.command {
        Command::Spectrum => cmd_spectrum(&cfg, &basis),
        Command::Det => cmd_det(&cfg, &basis),
        Command::Scan => cmd_scan(&cfg, &basis),
        Command::Count => cmd_count(&cfg, &basis),
        Command::LinCheck => cmd_lin_check(&cfg, &basis),
        Command::Verify => cmd_verify(&cfg, &basis),
        Command::Validate => cmd_validate(&cfg, &basis),
        Command::Limits => cmd_limits(&cfg, &basis),
        Command::Refine => cmd_refine(&cfg, &basis),
    }
}

fn require_lambda(spec: LambdaSpec, what: &str) -> Result<Complex64, CliError> {
    match spec {
        LambdaSpec::Value(v) => Ok(Complex64::new(v, 0.0)),
        LambdaSpec::Limit => Err(CliError::Config(format!(
            "{what} needs a numeric lambda, not \"limit\""
        ))),
    }
}

fn assemble_operator(
    cfg: &RunConfig,
    basis: &Arc<ModeBasis>,
    state: &SteadyState,
) -> Result<SpectralMatrix, CliError> {
    let name = cfg.spectrum_operator.as_str();
    let mu = Complex64::new(cfg.spectrum_mu, 0.0);
    Ok(match name {
        "minus-laplacian" => operators::minus_laplacian(basis),
        "l0" => operators::streamline_derivative(basis, state)?,
        "gprime" => operators::gprime_multiplier(basis, state)?,
        "p0" => operators::kernel_projection(basis, state)?,
        "a0" => operators::dispersion_limit(basis, state)?,
        "lvor" => operators::vorticity_operator(basis, state)?,
        "resolvent" => {
            operators::resolvent(basis, state, require_lambda(cfg.spectrum_lambda, name)?)?
        }
        "a-lambda" => match cfg.spectrum_lambda {
            LambdaSpec::Limit => operators::dispersion_limit(basis, state)?,
            LambdaSpec::Value(v) => {
                operators::dispersion(basis, state, Complex64::new(v, 0.0))?
            }
        },
        "k-lambda" => match cfg.spectrum_lambda {
            LambdaSpec::Limit => operators::birman_schwinger_limit(basis, state, mu)?,
            LambdaSpec::Value(v) => {
                operators::birman_schwinger(basis, state, Complex64::new(v, 0.0), mu)?
            }
        },
        "k0" => operators::birman_schwinger_limit(basis, state, mu)?,
        "k-tilde" => operators::birman_schwinger_vorticity(
            basis,
            state,
            require_lambda(cfg.spectrum_lambda, name)?,
        )?,
        other => {
            return Err(CliError::Config(format!(
                "unknown operator {other:?}; expected one of minus-laplacian, l0, gprime, \
                 resolvent, p0, a-lambda, a0, k-lambda, k0, k-tilde, lvor"
            )))
        }
    })
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    operator: &'a str,
    truncation: Truncation,
    dim: usize,
    backward_error: f64,
    eigenvalues: Vec<Complex64>,
}

fn cmd_spectrum(cfg: &RunConfig, basis: &Arc<ModeBasis>) -> Result<(String, bool), CliError> {
    let op = assemble_operator(cfg, basis, &cfg.state)?;
    let eig = op.eig()?;
    let report = SpectrumReport {
        operator: &cfg.spectrum_operator,
        truncation: cfg.truncation,
        dim: op.dim(),
        backward_error: eig.backward_error,
        eigenvalues: eig.eigenvalues.clone(),
    };
    if cfg.wants("json") {
        output::write_json(&cfg.out_dir, "spectrum.json", &report)?;
    }
    if cfg.wants("csv") {
        let rows: Vec<Vec<f64>> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, e)| vec![i as f64, e.re, e.im])
            .collect();
        output::write_csv(&cfg.out_dir, "spectrum.csv", "index,re,im", &rows)?;
    }
    if cfg.spectrum_dump_matrix {
        let mut rows = Vec::with_capacity(op.dim() * op.dim());
        for r in 0..op.dim() {
            for c in 0..op.dim() {
                let z = op.at(r, c);
                rows.push(vec![r as f64, c as f64, z.re, z.im]);
            }
        }
        output::write_csv(&cfg.out_dir, "matrix.csv", "row,col,re,im", &rows)?;
    }
    let max_re = eig
        .eigenvalues
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((
        format!(
            "spectrum: {} eigenvalues of {} (dim {}), max Re {:.6e}; reports in {}",
            eig.eigenvalues.len(),
            cfg.spectrum_operator,
            op.dim(),
            max_re,
            cfg.out_dir.display()
        ),
        true,
    ))
}

#[derive(Serialize)]
struct DetPoint {
    mu: Complex64,
    value: Complex64,
    log_modulus: f64,
    phase: f64,
    zero_to_precision: bool,
}

#[derive(Serialize)]
struct DetReport {
    lambda: Complex64,
    limit_family: bool,
    points: Vec<DetPoint>,
    skipped_on_laplacian: usize,
}

fn cmd_det(cfg: &RunConfig, basis: &Arc<ModeBasis>) -> Result<(String, bool), CliError> {
    let param = cfg.det_lambda.to_param();
    let (lambda, limit_family) = match param {
        DispersionParam::Limit => (Complex64::new(0.0, 0.0), true),
        DispersionParam::Lambda(l) => (l, false),
    };
    let n = cfg.det_points.max(2);
    let (lo, hi) = cfg.det_mu_range;
    let mut points = Vec::with_capacity(n);
    let mut skipped = 0usize;
    for i in 0..n {
        let mu = Complex64::new(lo + (hi - lo) * i as f64 / (n - 1) as f64, cfg.det_mu_im);
        match det_at(basis, &cfg.state, param, mu) {
            Ok(d) => points.push(DetPoint {
                mu,
                value: d.value,
                log_modulus: d.log_modulus,
                phase: d.phase,
                zero_to_precision: d.zero_to_precision,
            }),
            Err(FredholmError::Operator(OperatorError::MuOnLaplacianSpectrum { .. })) => {
                skipped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let report = DetReport {
        lambda,
        limit_family,
        points,
        skipped_on_laplacian: skipped,
    };
    if cfg.wants("json") {
        output::write_json(&cfg.out_dir, "det.json", &report)?;
    }
    if cfg.wants("csv") {
        let rows: Vec<Vec<f64>> = report
            .points
            .iter()
            .map(|p| {
                vec![
                    lambda.re,
                    lambda.im,
                    p.mu.re,
                    p.mu.im,
                    p.value.re,
                    p.value.im,
                    p.log_modulus,
                ]
            })
            .collect();
        output::write_csv(
            &cfg.out_dir,
            "det.csv",
            "lambda_re,lambda_im,mu_re,mu_im,D_re,D_im,logModulus",
            &rows,
        )?;
    }
    Ok((
        format!(
            "det: {} evaluations ({} skipped on the Laplacian spectrum); reports in {}",
            report.points.len(),
            skipped,
            cfg.out_dir.display()
        ),
        true,
    ))
}

fn cmd_scan(cfg: &RunConfig, basis: &Arc<ModeBasis>) -> Result<(String, bool), CliError> {
    let options = ScanOptions {
        lambda_range: cfg.scan_lambda_range,
        grid_points: cfg.scan_grid,
        bracket_tol: cfg.scan_tol,
        imag_violation_factor: 1e-6,
        complex_sweep: cfg.scan_complex,
    };
    let report = scan_unstable(basis, &cfg.state, &options)?;
    if cfg.wants("json") {
        output::write_json(&cfg.out_dir, "scan.json", &report)?;
        output::write_json(&cfg.out_dir, "roots.json", &report.roots)?;
    }
    if cfg.wants("csv") {
        let rows: Vec<Vec<f64>> = report
            .trace
            .iter()
            .map(|s| vec![s.lambda, s.det.re, s.det.im])
            .collect();
        output::write_csv(&cfg.out_dir, "scan.csv", "lambda,D_re,D_im", &rows)?;
        let roots: Vec<Vec<f64>> = report
            .roots
            .iter()
            .map(|r| vec![r.lambda_star, r.residual])
            .collect();
        output::write_csv(&cfg.out_dir, "roots.csv", "lambda_star,residual", &roots)?;
    }
    let summary = match report.roots.first() {
        Some(r) => format!(
            "scan: {} root(s) in ({:.3}, {:.3}); lambda* = {:.12} with |D| = {:.2e}; reports in {}",
            report.roots.len(),
            report.lambda_range.0,
            report.lambda_range.1,
            r.lambda_star,
            r.residual,
            cfg.out_dir.display()
        ),
        None => format!(
            "scan: no roots in ({:.3}, {:.3}); reports in {}",
            report.lambda_range.0,
            report.lambda_range.1,
            cfg.out_dir.display()
        ),
    };
    Ok((summary, true))
}

fn cmd_count(cfg: &RunConfig, basis: &Arc<ModeBasis>) -> Result<(String, bool), CliError> {
    if let Some(grid) = &cfg.count_lambda_grid {
        return cmd_count_grid(cfg, basis, grid);
    }
    let [re_min, re_max, im_min, im_max] = cfg.count_rect;
    let rect = Rect::new(re_min, re_max, im_min, im_max)?;
    let report = contour_count(basis, &cfg.state, cfg.count_lambda.to_param(), rect)?;
    if cfg.wants("json") {
        output::write_json(&cfg.out_dir, "count.json", &report)?;
    }
    if cfg.wants("csv") {
        let rows = vec![vec![
            rect.re_min,
            rect.re_max,
            rect.im_min,
            rect.im_max,
            report.winding as f64,
        ]];
        output::write_csv(
            &cfg.out_dir,
            "count.csv",
            "reMin,reMax,imMin,imMax,winding",
            &rows,
        )?;
    }
    Ok((
        format!(
            "count: {} zero(s) in [{}, {}] x [{}, {}] (estimate {:.4}, {} points/edge); reports in {}",
            report.winding,
            rect.re_min,
            rect.re_max,
            rect.im_min,
            rect.im_max,
            report.quadrature_estimate,
            report.edge_samples,
            cfg.out_dir.display()
        ),
        true,
    ))
}

fn cmd_lin_check(cfg: &RunConfig, basis: &Arc<ModeBasis>) -> Result<(String, bool), CliError> {
    let report = lin_check(basis, &cfg.state, cfg.allow_full2d)?;
    if cfg.wants("json") {
        output::write_json(&cfg.out_dir, "lin_check.json", &report)?;
    }
    Ok((
        format!(
            "lin-check: negative_count={}, has_kernel={}, criterion_fires={}; report in {}",
            report.negative_count,
            report.has_kernel,
            report.criterion_fires,
            cfg.out_dir.display()
        ),
        true,
    ))
}

fn cmd_verify(cfg: &RunConfig, basis: &Arc<ModeBasis>) -> Result<(String, bool), CliError> {
    let checks = verify::run_all(basis, &cfg.state, cfg.seed)?;
    if cfg.wants("json") {
        output::write_json(&cfg.out_dir, "verify.json", &checks)?;
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let worst = checks
        .iter()
        .map(|c| c.residual)
        .fold(0.0f64, f64::max);
    let ok = passed == checks.len();
    Ok((
        format!(
            "verify: {passed}/{} checks passed, worst residual {worst:.2e}; report in {}",
            checks.len(),
            cfg.out_dir.display()
        ),
        ok,
    ))
}

fn cmd_validate(cfg: &RunConfig, basis: &Arc<ModeBasis>) -> Result<(String, bool), CliError> {
    let report = cross_validate(basis, &cfg.state, cfg.validate_tol)?;
    if cfg.wants("json") {
        output::write_json(&cfg.out_dir, "validate.json", &report)?;
    }
    Ok((
        format!(
            "validate: {} unstable eigenvalue(s), {} scan root(s), max mismatch {:.2e} (tol {:.1e}); report in {}",
            report.unstable_eigenvalues.len(),
            report.scan_roots.len(),
            report.max_mismatch,
            report.tolerance,
            cfg.out_dir.display()
        ),
        report.ok,
    ))
}

fn cmd_limits(cfg: &RunConfig, basis: &Arc<ModeBasis>) -> Result<(String, bool), CliError> {
    let options = LimitOptions {
        seed: cfg.seed,
        projection_final_fraction_max: cfg.limits_proj_final_max,
        bs_final_over_initial_max: cfg.limits_bs_final_max,
    };
    let report = limit_studies(
        basis,
        &cfg.state,
        &cfg.limits_lambda_seq,
        Complex64::new(cfg.limits_mu, 0.0),
        &options,
    )?;
    if cfg.wants("json") {
        output::write_json(&cfg.out_dir, "limits.json", &report)?;
    }
    if cfg.wants("csv") {
        let rows: Vec<Vec<f64>> = report
            .lambda_seq
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                vec![
                    l,
                    report.projection_distances[i],
                    report.bs_distances[i],
                    report.det_distances[i],
                ]
            })
            .collect();
        output::write_csv(
            &cfg.out_dir,
            "limits.csv",
            "lambda,projection_distance,bs_distance,det_distance",
            &rows,
        )?;
    }
    Ok((
        format!(
            "limits: projection monotone {}, K monotone {}, final fractions {:.3}/{:.3} (gates {}/{}); report in {}",
            report.projection_monotone,
            report.bs_monotone,
            report.projection_final_fraction,
            report.bs_final_over_initial,
            cfg.limits_proj_final_max,
            cfg.limits_bs_final_max,
            cfg.out_dir.display()
        ),
        report.ok,
    ))
}

fn cmd_refine(cfg: &RunConfig, basis: &Arc<ModeBasis>) -> Result<(String, bool), CliError> {
    let ladder: Vec<Truncation> = cfg
        .refine_ladder
        .iter()
        .map(|&size| match cfg.truncation {
            Truncation::Subspace { m, j, k, .. } => Truncation::Subspace {
                m,
                j,
                k,
                p_max: size,
            },
            Truncation::Full2d { .. } => Truncation::Full2d { n1: size, n2: size },
        })
        .collect();
    let quantity = match cfg.refine_quantity.as_str() {
        "root" => RefinementQuantity::UnstableRoot,
        "negative-count" => RefinementQuantity::NegativeCount,
        "det" => RefinementQuantity::DetAt {
            lambda: Complex64::new(cfg.refine_lambda, 0.0),
            mu: Complex64::new(cfg.refine_mu, 0.0),
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown refine quantity {other:?}; expected root, negative-count or det"
            )))
        }
    };
    let options = ScanOptions {
        lambda_range: cfg.scan_lambda_range,
        grid_points: cfg.scan_grid,
        bracket_tol: cfg.scan_tol,
        imag_violation_factor: 1e-6,
        complex_sweep: false,
    };
    let report =
        refinement_study(&cfg.state, &ladder, quantity, Some(&options), cfg.refine_tol)?;
    if cfg.wants("json") {
        output::write_json(&cfg.out_dir, "refine.json", &report)?;
    }
    if cfg.wants("csv") {
        let rows: Vec<Vec<f64>> = report
            .levels
            .iter()
            .map(|l| {
                vec![
                    l.truncation.size() as f64,
                    l.value.re,
                    l.value.im,
                    l.relative_difference.unwrap_or(f64::NAN),
                ]
            })
            .collect();
        output::write_csv(
            &cfg.out_dir,
            "refine.csv",
            "basis_size,value_re,value_im,rel_diff",
            &rows,
        )?;
    }
    let _ = basis; // the ladder rebuilds its own bases
    let final_diff = report
        .final_difference
        .map(|d| format!("{d:.2e}"))
        .unwrap_or_else(|| "n/a".to_string());
    Ok((
        format!(
            "refine: {} over {} levels, final difference {}; verdict: {}; report in {}",
            cfg.refine_quantity,
            report.levels.len(),
            final_diff,
            report.verdict,
            cfg.out_dir.display()
        ),
        report.converged,
    ))
}

#[derive(Serialize)]
struct CountsReport {
    points: Vec<euler_spectra::NegativeCountPoint>,
}

/// Grid mode of `count`: negative-eigenvalue bookkeeping along a lambda grid,
/// each point cross-checked by the thin-rectangle winding.
fn cmd_count_grid(
    cfg: &RunConfig,
    basis: &Arc<ModeBasis>,
    grid: &[f64],
) -> Result<(String, bool), CliError> {
    let points = negative_count_vs_lambda(basis, &cfg.state, grid)?;
    if cfg.wants("json") {
        output::write_json(
            &cfg.out_dir,
            "counts.json",
            &CountsReport {
                points: points.clone(),
            },
        )?;
    }
    if cfg.wants("csv") {
        let rows: Vec<Vec<f64>> = points
            .iter()
            .map(|p| {
                vec![
                    p.lambda,
                    p.eigensolve_count as f64,
                    p.winding_count.map(f64::from).unwrap_or(f64::NAN),
                ]
            })
            .collect();
        output::write_csv(
            &cfg.out_dir,
            "counts.csv",
            "lambda,negative_count,winding",
            &rows,
        )?;
    }
    let agree = points
        .iter()
        .all(|p| p.winding_count.map(|w| w as usize == p.eigensolve_count) != Some(false));
    let counts: Vec<usize> = points.iter().map(|p| p.eigensolve_count).collect();
    Ok((
        format!(
            "count: negative counts along {} lambda values: {:?}, windings agree {agree}; reports in {}",
            points.len(),
            counts,
            cfg.out_dir.display()
        ),
        agree,
    ))
}
