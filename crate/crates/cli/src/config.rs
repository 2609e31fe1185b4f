//! Experiment configuration and its validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Diagonal {
        n: usize,
        a: f64,
        #[serde(default = "one")]
        frequency_scale: f64,
    },
    DampedWave {
        n: usize,
        damping: DampingProfile,
    },
    /// Matrix Market files; `b` is the damping operator, when present.
    MatrixFile {
        a: PathBuf,
        #[serde(default)]
        b: Option<PathBuf>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingProfile {
    Constant { value: f64 },
    /// `value` on `[lo, hi]`, zero elsewhere.
    Indicator { value: f64, lo: f64, hi: f64 },
}

impl DampingProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            DampingProfile::Constant { value } => value,
            DampingProfile::Indicator { value, lo, hi } => {
                if (lo..=hi).contains(&x) {
                    value
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Decay,
    Resolvent,
    Datko,
    WeakDatko,
    Lyapunov,
    Observability,
    Thm42,
    Sweep,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Decay => "decay",
            Analysis::Resolvent => "resolvent",
            Analysis::Datko => "datko",
            Analysis::WeakDatko => "weak-datko",
            Analysis::Lyapunov => "lyapunov",
            Analysis::Observability => "observability",
            Analysis::Thm42 => "thm42",
            Analysis::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub p: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub decay_window: Option<[f64; 2]>,
    pub s_grid: Option<Vec<f64>>,
    /// Logarithmic frequency grid over `[lo, hi]`; used when `s_grid` is absent.
    pub s_range: Option<[f64; 2]>,
    pub rel_tol: Option<f64>,
    /// Hex string, e.g. `"5EED"`.
    pub seed: Option<String>,
    pub random_probes: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

pub fn parse_seed(text: &str) -> Result<u64, CliError> {
    let digits = text.trim().trim_start_matches("0x").trim_start_matches("0X");
    u64::from_str_radix(digits, 16).map_err(|e| CliError::Validation(format!("seed `{text}` is not hexadecimal: {e}")))
}

fn missing(analysis: Analysis, field: &str) -> CliError {
    CliError::Validation(format!("analysis `{}` requires `{field}`", analysis.name()))
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("`{field}` {reason}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn has_damping(&self) -> bool {
        !matches!(self.model, ModelConfig::Diagonal { .. } | ModelConfig::MatrixFile { b: None, .. })
    }

    pub fn wants_sweep(&self) -> bool {
        self.analyses.contains(&Analysis::Sweep)
    }

    /// Checks that every requested analysis has what it needs. Runs before
    /// any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.model {
            ModelConfig::Diagonal { n, a, frequency_scale } => {
                if *n == 0 {
                    return Err(invalid("model.n", "must be at least 1"));
                }
                if !(*a > 0.0) {
                    return Err(invalid("model.a", "must be positive"));
                }
                if !(*frequency_scale > 0.0) {
                    return Err(invalid("model.frequency_scale", "must be positive"));
                }
            }
            ModelConfig::DampedWave { n, damping } => {
                if *n < 2 {
                    return Err(invalid("model.n", "must be at least 2"));
                }
                let value = match damping {
                    DampingProfile::Constant { value } | DampingProfile::Indicator { value, .. } => *value,
                };
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(invalid("model.damping.value", "must be nonnegative and finite"));
                }
            }
            ModelConfig::MatrixFile { .. } => {}
        }
        if self.analyses.is_empty() {
            return Err(invalid("analyses", "must name at least one analysis"));
        }
        let p = &self.params;
        if let Some(tol) = p.rel_tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(invalid("params.rel_tol", "must lie in (0, 1)"));
            }
        }
        if let Some(seed) = &p.seed {
            parse_seed(seed)?;
        }
        for &analysis in &self.analyses {
            match analysis {
                Analysis::Decay => {
                    let w = p.decay_window.ok_or_else(|| missing(analysis, "params.decay_window"))?;
                    if !(w[0] > 0.0 && w[1] > w[0]) {
                        return Err(invalid("params.decay_window", "must satisfy 0 < t0 < t1"));
                    }
                }
                Analysis::Resolvent => match (&p.s_grid, p.s_range) {
                    (Some(grid), _) if grid.is_empty() => return Err(invalid("params.s_grid", "is empty")),
                    (Some(_), _) => {}
                    (None, Some(r)) => {
                        if !(r[0] > 0.0 && r[1] > r[0]) {
                            return Err(invalid("params.s_range", "must satisfy 0 < lo < hi"));
                        }
                    }
                    (None, None) => return Err(missing(analysis, "params.s_grid")),
                },
                Analysis::Datko | Analysis::WeakDatko => {
                    let pv = p.p.ok_or_else(|| missing(analysis, "params.p"))?;
                    if !(pv >= 1.0) {
                        return Err(invalid("params.p", "must be at least 1"));
                    }
                    self.require_betas(analysis, false)?;
                }
                Analysis::Lyapunov => self.require_betas(analysis, false)?,
                Analysis::Observability | Analysis::Thm42 => {
                    let tau = p.tau.ok_or_else(|| missing(analysis, "params.tau"))?;
                    if !(tau > 0.0) {
                        return Err(invalid("params.tau", "must be positive"));
                    }
                    self.require_betas(analysis, true)?;
                    if !self.has_damping() {
                        return Err(CliError::Validation(format!(
                            "analysis `{}` requires a model with a damping operator (damped_wave, or matrix_file with `b`)",
                            analysis.name()
                        )));
                    }
                }
                Analysis::Sweep => {}
            }
        }
        if self.wants_sweep() {
            self.require_sweep()?;
        }
        Ok(())
    }

    fn require_betas(&self, analysis: Analysis, unit_interval: bool) -> Result<(), CliError> {
        let betas = self.params.betas.as_ref().ok_or_else(|| missing(analysis, "params.betas"))?;
        if betas.is_empty() {
            return Err(missing(analysis, "params.betas"));
        }
        for &b in betas {
            if !(b >= 0.0) {
                return Err(invalid("params.betas", format!("contains negative value {b}")));
            }
            if unit_interval && !(b > 0.0 && b <= 1.0) {
                return Err(invalid(
                    "params.betas",
                    format!("must lie in (0, 1] for analysis `{}`, got {b}", analysis.name()),
                ));
            }
        }
        Ok(())
    }

    pub fn require_sweep(&self) -> Result<&[usize], CliError> {
        let dims = &self.sweep.as_ref().ok_or_else(|| invalid("sweep.dims", "is required for a dimension sweep"))?.dims;
        if dims.is_empty() {
            return Err(invalid("sweep.dims", "is empty"));
        }
        if matches!(self.model, ModelConfig::MatrixFile { .. }) {
            return Err(invalid("model", "must be a parametric family (diagonal or damped_wave) for a dimension sweep"));
        }
        let min = if matches!(self.model, ModelConfig::DampedWave { .. }) { 2 } else { 1 };
        if dims.iter().any(|&n| n < min) {
            return Err(invalid("sweep.dims", format!("entries must be at least {min}")));
        }
        if dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sweep.dims", "must be strictly increasing"));
        }
        Ok(dims)
    }
}
