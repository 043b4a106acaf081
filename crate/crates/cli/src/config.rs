//! Run configuration: a TOML document with nested sections, overridable by
//! command-line flags whose names mirror the config keys. Everything is
//! validated against the module preconditions before any computation starts.

use std::path::PathBuf;

use serde::Deserialize;

use euler_spectra::grid::Truncation;
use euler_spectra::{Complex64, SteadyState, DEFAULT_SEED};

use crate::CliError;

/// Residual gate for user-supplied steady states.
const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub steady_state: SteadyStateSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub det: DetSection,
    #[serde(default)]
    pub count: CountSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub lin_check: LinCheckSection,
    #[serde(default)]
    pub limits: LimitsSection,
    #[serde(default)]
    pub refine: RefineSection,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyStateSection {
    pub m: Option<i32>,
    pub u_profile: Option<Vec<f64>>,
    pub stream: Option<Vec<f64>>,
    pub vorticity: Option<Vec<f64>>,
    pub gprime: Option<Vec<f64>>,
    pub gprime_sup_norm: Option<f64>,
    pub residual_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub mode: Option<String>,
    pub j: Option<i32>,
    pub k: Option<i32>,
    pub trunc: Option<i32>,
    pub n1: Option<i32>,
    pub n2: Option<i32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub complex: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetSection {
    pub lambda: Option<toml::Value>,
    pub mu_re_min: Option<f64>,
    pub mu_re_max: Option<f64>,
    pub mu_im: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountSection {
    pub lambda: Option<toml::Value>,
    pub rect: Option<[f64; 4]>,
    /// When set, `count` tracks the negative-eigenvalue count along this
    /// lambda grid instead of counting inside one rectangle.
    pub lambda_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub operator: Option<String>,
    pub lambda: Option<toml::Value>,
    pub mu: Option<f64>,
    pub dump_matrix: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinCheckSection {
    pub allow_full2d: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    pub lambda_seq: Option<Vec<f64>>,
    pub mu: Option<f64>,
    pub proj_final_max: Option<f64>,
    pub bs_final_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineSection {
    pub quantity: Option<String>,
    pub ladder: Option<Vec<i32>>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub formats: Option<Vec<String>>,
}

/// Spectral parameter as written in configs: a positive real or the literal
/// string "limit".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Limit,
    Value(f64),
}

impl LambdaSpec {
    pub fn parse_str(s: &str) -> Result<Self, CliError> {
        if s.eq_ignore_ascii_case("limit") {
            return Ok(LambdaSpec::Limit);
        }
        s.parse::<f64>()
            .map(LambdaSpec::Value)
            .map_err(|_| CliError::Config(format!("lambda must be a number or \"limit\", got {s:?}")))
    }

    pub fn from_toml(v: &toml::Value) -> Result<Self, CliError> {
        match v {
            toml::Value::String(s) => Self::parse_str(s),
            toml::Value::Float(f) => Ok(LambdaSpec::Value(*f)),
            toml::Value::Integer(i) => Ok(LambdaSpec::Value(*i as f64)),
            other => Err(CliError::Config(format!(
                "lambda must be a number or \"limit\", got {other}"
            ))),
        }
    }

    pub fn to_param(self) -> euler_spectra::DispersionParam {
        match self {
            LambdaSpec::Limit => euler_spectra::DispersionParam::Limit,
            LambdaSpec::Value(v) => {
                euler_spectra::DispersionParam::Lambda(Complex64::new(v, 0.0))
            }
        }
    }
}

/// Fully resolved configuration: file values with flag overrides applied and
/// all module preconditions checked.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub state: SteadyState,
    pub truncation: Truncation,
    pub scan_lambda_range: (f64, f64),
    pub scan_grid: usize,
    pub scan_tol: f64,
    pub scan_complex: bool,
    pub det_lambda: LambdaSpec,
    pub det_mu_range: (f64, f64),
    pub det_mu_im: f64,
    pub det_points: usize,
    pub count_lambda: LambdaSpec,
    pub count_rect: [f64; 4],
    pub count_lambda_grid: Option<Vec<f64>>,
    pub spectrum_operator: String,
    pub spectrum_lambda: LambdaSpec,
    pub spectrum_mu: f64,
    pub spectrum_dump_matrix: bool,
    pub allow_full2d: bool,
    pub limits_lambda_seq: Vec<f64>,
    pub limits_mu: f64,
    pub limits_proj_final_max: f64,
    pub limits_bs_final_max: f64,
    pub refine_quantity: String,
    pub refine_ladder: Vec<i32>,
    pub refine_lambda: f64,
    pub refine_mu: f64,
    pub refine_tol: f64,
    pub validate_tol: f64,
    pub out_dir: PathBuf,
    pub formats: Vec<String>,
    pub seed: u64,
}

pub struct Overrides {
    pub m: Option<i32>,
    pub j: Option<i32>,
    pub k: Option<i32>,
    pub trunc: Option<i32>,
    pub n1: Option<i32>,
    pub n2: Option<i32>,
    pub mode: Option<String>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub lambda: Option<String>,
    pub mu: Option<f64>,
    pub rect: Option<String>,
    pub operator: Option<String>,
    pub dump_matrix: bool,
    pub complex: bool,
    pub allow_full2d: bool,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, ov: &Overrides) -> Result<Self, CliError> {
        let m = ov.m.or(file.steady_state.m).unwrap_or(4);

        let state = if file.steady_state.u_profile.is_some()
            || file.steady_state.stream.is_some()
            || file.steady_state.vorticity.is_some()
            || file.steady_state.gprime.is_some()
        {
            let missing = || {
                CliError::Config(
                    "explicit steady states need u_profile, stream, vorticity, gprime and gprime_sup_norm".into(),
                )
            };
            let s = SteadyState::new(
                m,
                file.steady_state.u_profile.clone().ok_or_else(missing)?,
                file.steady_state.stream.clone().ok_or_else(missing)?,
                file.steady_state.vorticity.clone().ok_or_else(missing)?,
                file.steady_state.gprime.clone().ok_or_else(missing)?,
                file.steady_state.gprime_sup_norm.ok_or_else(missing)?,
            )
            .map_err(|e| CliError::Config(e.to_string()))?;
            let grid = (4 * s.max_harmonic().max(1)).max(256);
            let residual = s.check_equilibrium(grid);
            let tol = file.steady_state.residual_tol.unwrap_or(DEFAULT_RESIDUAL_TOL);
            if residual > tol {
                return Err(CliError::Config(format!(
                    "steady state fails the equilibrium identity: residual {residual:.3e} > {tol:.1e}"
                )));
            }
            s
        } else {
            SteadyState::single_mode_shear(m).map_err(|e| CliError::Config(e.to_string()))?
        };

        let mode = ov
            .mode
            .clone()
            .or(file.truncation.mode.clone())
            .unwrap_or_else(|| "subspace".to_string());
        let trunc_size = ov.trunc.or(file.truncation.trunc);
        let truncation = match mode.as_str() {
            "subspace" => Truncation::Subspace {
                m,
                j: ov.j.or(file.truncation.j).unwrap_or(1),
                k: ov.k.or(file.truncation.k).unwrap_or(1),
                p_max: trunc_size.unwrap_or(16),
            },
            "full2d" => {
                let n1 = ov.n1.or(file.truncation.n1).or(trunc_size).unwrap_or(8);
                let n2 = ov.n2.or(file.truncation.n2).or(trunc_size).unwrap_or(8);
                Truncation::Full2d { n1, n2 }
            }
            other => {
                return Err(CliError::Config(format!(
                    "truncation mode must be \"subspace\" or \"full2d\", got {other:?}"
                )))
            }
        };
        truncation
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;

        let lambda_override = ov
            .lambda
            .as_deref()
            .map(LambdaSpec::parse_str)
            .transpose()?;
        let file_det_lambda = file.det.lambda.as_ref().map(LambdaSpec::from_toml).transpose()?;
        let file_count_lambda = file.count.lambda.as_ref().map(LambdaSpec::from_toml).transpose()?;
        let file_spectrum_lambda = file
            .spectrum
            .lambda
            .as_ref()
            .map(LambdaSpec::from_toml)
            .transpose()?;

        let rect = if let Some(spec) = &ov.rect {
            let parts: Vec<f64> = spec
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Config(format!("--rect expects reMin,reMax,imMin,imMax, got {spec:?}")))?;
            if parts.len() != 4 {
                return Err(CliError::Config(format!(
                    "--rect expects exactly four numbers, got {}",
                    parts.len()
                )));
            }
            Some([parts[0], parts[1], parts[2], parts[3]])
        } else {
            None
        };

        let out_dir = ov
            .out
            .clone()
            .or(file.output.dir.clone())
            .or_else(|| std::env::var_os("EULER_SPECTRA_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let formats = match &ov.format {
            Some(f) => f.split(',').map(|s| s.trim().to_string()).collect(),
            None => file
                .output
                .formats
                .clone()
                .unwrap_or_else(|| vec!["json".to_string(), "csv".to_string()]),
        };
        for f in &formats {
            if f != "json" && f != "csv" {
                return Err(CliError::Config(format!(
                    "output format must be json or csv, got {f:?}"
                )));
            }
        }

        let grid = ov.grid.or(file.scan.grid).unwrap_or(256);
        if grid < 2 {
            return Err(CliError::Config("scan grid needs at least 2 points".into()));
        }
        let lambda_min = ov.lambda_min.or(file.scan.lambda_min).unwrap_or(0.01);
        let lambda_max = ov
            .lambda_max
            .or(file.scan.lambda_max)
            .unwrap_or(4.0 * state.gprime_sup_norm());
        if !(lambda_min > 0.0 && lambda_max > lambda_min) {
            return Err(CliError::Config(format!(
                "scan range must satisfy 0 < lambda_min < lambda_max, got ({lambda_min}, {lambda_max})"
            )));
        }

        let refine_ladder = file.refine.ladder.clone().unwrap_or_else(|| vec![8, 16, 32, 64]);

        Ok(RunConfig {
            state,
            truncation,
            scan_lambda_range: (lambda_min, lambda_max),
            scan_grid: grid,
            scan_tol: ov.tol.or(file.scan.tol).unwrap_or(1e-10),
            scan_complex: ov.complex || file.scan.complex.unwrap_or(false),
            det_lambda: lambda_override
                .or(file_det_lambda)
                .unwrap_or(LambdaSpec::Value(0.5)),
            det_mu_range: (
                file.det.mu_re_min.unwrap_or(-8.0),
                file.det.mu_re_max.unwrap_or(8.0),
            ),
            det_mu_im: file.det.mu_im.unwrap_or(0.0),
            det_points: file.det.points.unwrap_or(64),
            count_lambda: lambda_override
                .or(file_count_lambda)
                .unwrap_or(LambdaSpec::Limit),
            count_rect: rect
                .or(file.count.rect)
                .unwrap_or([-7.0, -5.0, -1.0, 1.0]),
            count_lambda_grid: file.count.lambda_grid.clone(),
            spectrum_operator: ov
                .operator
                .clone()
                .or(file.spectrum.operator.clone())
                .unwrap_or_else(|| "a0".to_string()),
            spectrum_lambda: lambda_override
                .or(file_spectrum_lambda)
                .unwrap_or(LambdaSpec::Value(0.5)),
            spectrum_mu: ov.mu.or(file.spectrum.mu).unwrap_or(0.0),
            spectrum_dump_matrix: ov.dump_matrix || file.spectrum.dump_matrix.unwrap_or(false),
            allow_full2d: ov.allow_full2d || file.lin_check.allow_full2d.unwrap_or(false),
            limits_lambda_seq: file
                .limits
                .lambda_seq
                .clone()
                .unwrap_or_else(|| vec![1.0, 0.1, 0.01, 0.001]),
            limits_mu: ov.mu.or(file.limits.mu).unwrap_or(-1.0),
            limits_proj_final_max: file.limits.proj_final_max.unwrap_or(0.01),
            limits_bs_final_max: file.limits.bs_final_max.unwrap_or(0.05),
            refine_quantity: file
                .refine
                .quantity
                .clone()
                .unwrap_or_else(|| "root".to_string()),
            refine_ladder,
            refine_lambda: file.refine.lambda.unwrap_or(0.5),
            refine_mu: ov.mu.or(file.refine.mu).unwrap_or(0.0),
            refine_tol: file.refine.tol.unwrap_or(1e-6),
            validate_tol: ov.tol.or(file.validate.tol).unwrap_or(1e-6),
            out_dir,
            formats,
            seed: ov.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        })
    }

    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

pub fn load_file(path: &std::path::Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("bad config: {e}")))
}
