//! Executes analyses and assembles the report.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use semistab::decay::{self, BtReport, ResolventSweep};
use semistab::linalg::ComplexMatrix;
use semistab::lyapunov::{self, DimensionTable};
use semistab::matfun::GeneratorSummary;
use semistab::models;
use semistab::observability::{self, PipelineOptions, Verdict};
use semistab::orbits::{self, OrbitOptions, PairSet, ProbeSet};
use semistab::{mtx, DampedSystem, DecayFit, DiagonalModelSpec, Generator};

use crate::config::{Analysis, ExperimentConfig, ModelConfig};
use crate::output::{write_csv, Csv};
use crate::CliError;

pub const TOOL_NAME: &str = "semistab";

/// A generator together with the damping data it came from.
pub struct Model {
    /// Generator analysed by decay, resolvent, Datko and Lyapunov: `A_B`
    /// when a damping operator is present, `A` otherwise.
    pub generator: Generator,
    pub system: Option<DampedSystem>,
    pub diagonal: Option<DiagonalModelSpec>,
}

pub fn build_model(model: &ModelConfig, n_override: Option<usize>) -> Result<Model, CliError> {
    match model {
        ModelConfig::Diagonal { n, a, frequency_scale } => {
            let spec = DiagonalModelSpec { n: n_override.unwrap_or(*n), a: *a, frequency_scale: *frequency_scale };
            let generator = models::build_diagonal(&spec)?;
            Ok(Model { generator, system: None, diagonal: Some(spec) })
        }
        ModelConfig::DampedWave { n, damping } => {
            let system = models::build_damped_wave(n_override.unwrap_or(*n), |x| damping.eval(x))?;
            Ok(Model { generator: system.a_b.clone(), system: Some(system), diagonal: None })
        }
        ModelConfig::MatrixFile { a, b } => {
            let a = Generator::new(read_matrix(a)?)?;
            match b {
                Some(path) => {
                    let system = models::damp(&a, &read_matrix(path)?)?;
                    Ok(Model { generator: system.a_b.clone(), system: Some(system), diagonal: None })
                }
                None => Ok(Model { generator: a, system: None, diagonal: None }),
            }
        }
    }
}

fn read_matrix(path: &Path) -> Result<ComplexMatrix<f64>, CliError> {
    mtx::read(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisOutcome {
    pub analysis: &'static str,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<String>,
    #[serde(skip)]
    exit_code: i32,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub n: usize,
    pub model: GeneratorSummary,
    pub analyses: Vec<AnalysisOutcome>,
    /// Resolvent exponent against decay exponent, when both were run.
    pub correspondence: Option<BtReport<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioTable {
    pub quantity: String,
    pub beta: Option<f64>,
    pub table: DimensionTable<f64>,
    pub uniform: bool,
    /// Growth exponent in `N` expected on the diagonal family.
    pub predicted_exponent: Option<f64>,
    pub matches_prediction: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: Tool,
    pub seed: String,
    pub config: ExperimentConfig,
    pub started_at: u64,
    pub finished_at: u64,
    pub runs: Vec<RunReport>,
    pub ratio_tables: Vec<RatioTable>,
    pub warnings: Vec<String>,
}

impl Report {
    /// 0 when every analysis succeeded, otherwise the largest failure code.
    pub fn exit_code(&self) -> i32 {
        self.runs.iter().flat_map(|r| &r.analyses).map(|a| a.exit_code).max().unwrap_or(0)
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub struct Runner<'a> {
    config: &'a ExperimentConfig,
    out: PathBuf,
    seed: u64,
    warnings: Vec<String>,
}

/// Headline value of one analysis at one dimension, for ratio tables.
struct Headline {
    quantity: &'static str,
    beta: Option<f64>,
    value: f64,
}

struct Success {
    result: Value,
    files: Vec<String>,
    headlines: Vec<Headline>,
}

impl<'a> Runner<'a> {
    pub fn new(config: &'a ExperimentConfig, out: PathBuf, seed: u64) -> Self {
        Self { config, out, seed, warnings: Vec::new() }
    }

    fn probes(&self) -> ProbeSet<f64> {
        let random = self.config.params.random_probes.unwrap_or(orbits::DEFAULT_RANDOM_PROBES);
        ProbeSet { basis: true, random, seed: self.seed, explicit: Vec::new() }
    }

    fn orbit_opts(&self) -> OrbitOptions<f64> {
        self.config.params.rel_tol.map(OrbitOptions::with_rel_tol).unwrap_or_default()
    }

    fn betas(&self) -> Vec<f64> {
        self.config.params.betas.clone().unwrap_or_default()
    }

    /// Runs every analysis in order, once per dimension when `dims` is
    /// given.
    pub fn execute(mut self, dims: Option<&[usize]>) -> Result<Report, CliError> {
        let started_at = unix_now();
        std::fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", self.out.display())))?;
        let sizes: Vec<Option<usize>> = match dims {
            Some(d) => d.iter().map(|&n| Some(n)).collect(),
            None => vec![None],
        };
        let mut runs = Vec::new();
        let mut headlines: Vec<(usize, Headline)> = Vec::new();
        let mut diagonal_a = None;
        for n in sizes {
            let model = build_model(&self.config.model, n)?;
            diagonal_a = model.diagonal.map(|s| s.a);
            let (run, heads) = self.run_one(&model)?;
            headlines.extend(heads.into_iter().map(|h| (run.n, h)));
            runs.push(run);
        }
        let ratio_tables = if dims.is_some_and(|d| d.len() >= 2) {
            self.ratio_tables(&headlines, diagonal_a)
        } else {
            Vec::new()
        };
        let mut warnings = std::mem::take(&mut self.warnings);
        for t in &ratio_tables {
            if t.matches_prediction == Some(false) {
                warnings.push(format!(
                    "{} (beta = {:?}): ratios do not match the predicted growth N^{}",
                    t.quantity,
                    t.beta,
                    t.predicted_exponent.unwrap_or(0.0)
                ));
            }
        }
        let report = Report {
            tool: Tool { name: TOOL_NAME, version: env!("CARGO_PKG_VERSION") },
            seed: format!("0x{:X}", self.seed),
            config: self.config.clone(),
            started_at,
            finished_at: unix_now(),
            runs,
            ratio_tables,
            warnings,
        };
        let path = self.out.join("report.json");
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
        Ok(report)
    }

    fn run_one(&mut self, model: &Model) -> Result<(RunReport, Vec<Headline>), CliError> {
        let n = model.generator.dim();
        let mut outcomes = Vec::new();
        let mut heads = Vec::new();
        let mut fit: Option<DecayFit> = None;
        let mut sweep: Option<ResolventSweep<f64>> = None;
        for &analysis in &self.config.analyses {
            if analysis == Analysis::Sweep {
                continue;
            }
            let result = match analysis {
                Analysis::Decay => self.decay(model, n, &mut fit),
                Analysis::Resolvent => self.resolvent(model, n, &mut sweep),
                Analysis::Datko => self.datko(model, n),
                Analysis::WeakDatko => self.weak_datko(model, n),
                Analysis::Lyapunov => self.lyapunov(model, n),
                Analysis::Observability => self.observability(model, n),
                Analysis::Thm42 => self.thm42(model, n),
                Analysis::Sweep => unreachable!(),
            };
            outcomes.push(match result {
                Ok(s) => {
                    heads.extend(s.headlines);
                    AnalysisOutcome {
                        analysis: analysis.name(),
                        status: "ok",
                        result: Some(s.result),
                        error: None,
                        files: s.files,
                        exit_code: 0,
                    }
                }
                Err(CliError::Internal(msg)) => return Err(CliError::Internal(msg)),
                Err(e) => AnalysisOutcome {
                    analysis: analysis.name(),
                    status: "error",
                    result: None,
                    error: Some(e.to_string()),
                    files: Vec::new(),
                    exit_code: e.exit_code(),
                },
            });
        }
        let correspondence = match (&fit, &sweep) {
            (Some(f), Some(s)) => decay::bt_correspondence(f, s).ok(),
            _ => None,
        };
        Ok((RunReport { n, model: model.generator.summary(), analyses: outcomes, correspondence }, heads))
    }

    fn csv(&self, name: String, csv: Csv) -> Result<String, CliError> {
        write_csv(&self.out.join(&name), &csv)?;
        Ok(name)
    }

    fn matrix(&self, name: String, m: &ComplexMatrix<f64>, comment: &str) -> Result<String, CliError> {
        mtx::write(self.out.join(&name), m, Some(comment)).map_err(|e| CliError::Internal(e.to_string()))?;
        Ok(name)
    }

    fn decay(&mut self, model: &Model, n: usize, keep: &mut Option<DecayFit>) -> Result<Success, CliError> {
        let window = self.config.params.decay_window.expect("validated");
        let inv = model.generator.inverse()?;
        let fit = decay::decay_fit(&model.generator, &inv, window, decay::SAMPLES_PER_DECADE)?;
        if fit.contaminated {
            self.warnings.push(format!("decay (n = {n}): the fit window sees the exponential tail"));
        }
        if let Some(spec) = &model.diagonal {
            if !decay::diagonal_window_ok(spec, window) {
                self.warnings.push(format!("decay (n = {n}): window extends past the truncation dimension"));
            }
        }
        let mut csv = Csv::new(&["t", "norm", "log_t", "log_norm"]);
        for &(t, v) in &fit.series {
            csv.row([t, v, t.ln(), v.ln()]);
        }
        let file = self.csv(format!("decay_n{n}.csv"), csv)?;
        let result = serde_json::to_value(&fit).map_err(internal)?;
        let headlines = vec![Headline { quantity: "decay_slope", beta: None, value: fit.slope }];
        *keep = Some(fit);
        Ok(Success { result, files: vec![file], headlines })
    }

    fn resolvent(&mut self, model: &Model, n: usize, keep: &mut Option<ResolventSweep<f64>>) -> Result<Success, CliError> {
        let p = &self.config.params;
        let grid = match (&p.s_grid, p.s_range) {
            (Some(g), _) => g.clone(),
            (None, Some(r)) => decay::log_frequency_grid(r[0], r[1])?,
            (None, None) => unreachable!("validated"),
        };
        let sweep = decay::resolvent_sweep(&model.generator, &grid)?;
        if !sweep.excluded.is_empty() {
            self.warnings.push(format!("resolvent (n = {n}): {} grid points on the spectrum", sweep.excluded.len()));
        }
        let mut csv = Csv::new(&["s", "norm"]);
        for s in &sweep.samples {
            csv.row_opt(s.s, s.norm);
        }
        let file = self.csv(format!("resolvent_n{n}.csv"), csv)?;
        let result = json!({
            "exponent": sweep.exponent(),
            "fit": sweep.fit,
            "window": sweep.window,
            "excluded": sweep.excluded,
            "samples": sweep.samples.len(),
        });
        let headlines =
            sweep.exponent().map(|e| Headline { quantity: "resolvent_exponent", beta: None, value: e }).into_iter().collect();
        *keep = Some(sweep);
        Ok(Success { result, files: vec![file], headlines })
    }

    fn datko(&mut self, model: &Model, n: usize) -> Result<Success, CliError> {
        let p = self.config.params.p.expect("validated");
        let probes = self.probes();
        let opts = self.orbit_opts();
        let mut results = Vec::new();
        let mut files = Vec::new();
        let mut headlines = Vec::new();
        for beta in self.betas() {
            let cert = orbits::datko_constant_with(&model.generator, beta, p, &probes, &opts)?;
            let mut csv = Csv::new(&["id", "value", "error", "tail"]);
            for r in &cert.probes {
                csv.row_id(&r.id, [r.value, r.error, r.tail]);
            }
            files.push(self.csv(format!("datko_b{beta}_n{n}.csv"), csv)?);
            headlines.push(Headline { quantity: "datko_k_pow", beta: Some(beta), value: cert.k_pow() });
            results.push(json!({
                "p": cert.p, "beta": cert.beta, "k": cert.k, "k_pow": cert.k_pow(), "m": cert.m,
                "argmax": cert.argmax, "coverage": cert.coverage,
            }));
        }
        Ok(Success { result: Value::Array(results), files, headlines })
    }

    fn weak_datko(&mut self, model: &Model, n: usize) -> Result<Success, CliError> {
        let p = self.config.params.p.expect("validated");
        let pairs = PairSet { seed: self.seed, ..PairSet::default() };
        let opts = self.orbit_opts();
        let mut results = Vec::new();
        let mut files = Vec::new();
        let mut headlines = Vec::new();
        for beta in self.betas() {
            let r = orbits::weak_datko_constant_with(&model.generator, beta, p, &pairs, &opts)?;
            let mut csv = Csv::new(&["id", "value", "error", "tail"]);
            for row in &r.pairs {
                csv.row_id(&row.id, [row.value, row.error, row.tail]);
            }
            files.push(self.csv(format!("weak_datko_b{beta}_n{n}.csv"), csv)?);
            headlines.push(Headline { quantity: "weak_datko_k_pow", beta: Some(beta), value: r.k.powf(p) });
            results.push(json!({ "p": r.p, "beta": r.beta, "k": r.k, "argmax": r.argmax, "pairs": r.pairs.len() }));
        }
        Ok(Success { result: Value::Array(results), files, headlines })
    }

    fn lyapunov(&mut self, model: &Model, n: usize) -> Result<Success, CliError> {
        let a = &model.generator;
        let cert = match lyapunov::lyap_direct(a) {
            Ok(c) => c,
            Err(semistab::Error::IllConditioned { .. }) => {
                lyapunov::lyap_quadrature(a, self.config.params.rel_tol.unwrap_or(1e-10))?
            }
            Err(e) => return Err(e.into()),
        };
        let betas = self.betas();
        let cert = lyapunov::weighted_certificate(&cert, a, &betas)?;
        if cert.positivity_margin < -1e-10 {
            self.warnings.push(format!("lyapunov (n = {n}): P has negative eigenvalue {}", cert.positivity_margin));
        }
        let mut csv = Csv::new(&["beta", "weighted_norm", "residual_weighted"]);
        let mut residuals = Vec::new();
        let mut headlines = Vec::new();
        for w in &cert.weighted_norms {
            let r = lyapunov::lyap_residual_weighted(&cert, a, w.beta)?;
            csv.row([w.beta, w.norm, r]);
            residuals.push(json!({ "beta": w.beta, "residual": r }));
            headlines.push(Headline { quantity: "lyapunov_weighted_norm", beta: Some(w.beta), value: w.norm });
        }
        let files = vec![
            self.csv(format!("lyapunov_n{n}.csv"), csv)?,
            self.matrix(format!("lyapunov_P_n{n}.mtx"), &cert.p, "Lyapunov operator P")?,
        ];
        let mut result = serde_json::to_value(&cert).map_err(internal)?;
        result["residual_weighted"] = Value::Array(residuals);
        Ok(Success { result, files, headlines })
    }

    fn observability(&mut self, model: &Model, n: usize) -> Result<Success, CliError> {
        let sys = model.system.as_ref().expect("validated");
        let tau = self.config.params.tau.expect("validated");
        let mut files = Vec::new();
        let mut results = Vec::new();
        let mut headlines = Vec::new();
        let comparison = observability::damping_comparison(sys, tau, &self.probes())?;
        if comparison.violated {
            self.warnings.push(format!("observability (n = {n}): damping comparison violated"));
        }
        let c = sys.b.adjoint().scale_real(2f64.sqrt());
        let opts = self.pipeline_options();
        for (i, beta) in self.betas().into_iter().enumerate() {
            let cert = observability::obs_constant(&sys.a, &sys.b, tau, beta)?;
            if i == 0 {
                files.push(self.matrix(format!("observability_gramian_n{n}.mtx"), &cert.gramian, "observability Gramian")?);
            }
            if !cert.feasible {
                self.warnings.push(format!("observability (n = {n}, beta = {beta}): Gramian is singular"));
            } else {
                headlines.push(Headline { quantity: "observability_k", beta: Some(beta), value: cert.k });
            }
            let pipeline = observability::lemma41_with(&sys.a_b, &c, beta, 2.0, tau, &opts)?;
            if let Some(link) = pipeline.first_failure {
                self.warnings.push(format!("observability (n = {n}, beta = {beta}): link `{link}` fails"));
            }
            files.push(self.csv(format!("observability_b{beta}_n{n}.csv"), links_csv(&pipeline.links))?);
            results.push(json!({ "certificate": cert, "pipeline": pipeline }));
        }
        Ok(Success { result: json!({ "comparison": comparison, "betas": results }), files, headlines })
    }

    fn pipeline_options(&self) -> PipelineOptions<f64> {
        let mut opts = PipelineOptions::<f64> {
            probes: ProbeSet { basis: false, random: 8, seed: self.seed, explicit: Vec::new() },
            ..PipelineOptions::default()
        };
        if let Some(w) = self.config.params.decay_window {
            opts.decay_window = w;
        }
        if let Some(tol) = self.config.params.rel_tol {
            opts.rel_tol = tol;
        }
        opts
    }

    fn thm42(&mut self, model: &Model, n: usize) -> Result<Success, CliError> {
        let sys = model.system.as_ref().expect("validated");
        let tau = self.config.params.tau.expect("validated");
        let opts = self.pipeline_options();
        let mut files = Vec::new();
        let mut results = Vec::new();
        let mut headlines = Vec::new();
        for beta in self.betas() {
            let r = observability::thm42_with(sys, beta, tau, &opts)?;
            if r.verdict != Verdict::Pass {
                self.warnings.push(format!("thm42 (n = {n}, beta = {beta}): verdict {:?}", r.verdict));
            }
            if r.exponential_only == Some(true) {
                self.warnings.push(format!("thm42 (n = {n}, beta = {beta}): decay fit sees only the exponential tail"));
            }
            if let Some(p) = &r.pipeline {
                files.push(self.csv(format!("thm42_b{beta}_n{n}.csv"), links_csv(&p.links))?);
                if p.k.is_finite() {
                    headlines.push(Headline { quantity: "thm42_pipeline_k", beta: Some(beta), value: p.k });
                }
            }
            results.push(serde_json::to_value(&r).map_err(internal)?);
        }
        Ok(Success { result: Value::Array(results), files, headlines })
    }

    fn ratio_tables(&self, heads: &[(usize, Headline)], diagonal_a: Option<f64>) -> Vec<RatioTable> {
        let mut keys: Vec<(&'static str, Option<f64>)> = Vec::new();
        for (_, h) in heads {
            if !keys.iter().any(|k| k.0 == h.quantity && k.1 == h.beta) {
                keys.push((h.quantity, h.beta));
            }
        }
        keys.into_iter()
            .filter_map(|(quantity, beta)| {
                let (dims, values): (Vec<usize>, Vec<f64>) =
                    heads.iter().filter(|(_, h)| h.quantity == quantity && h.beta == beta).map(|(n, h)| (*n, h.value)).unzip();
                if dims.len() < 2 {
                    return None;
                }
                let table = DimensionTable::new(dims, values);
                let predicted = match (quantity, diagonal_a, beta) {
                    ("datko_k_pow", Some(a), Some(b)) => Some((a - self.config.params.p.unwrap_or(2.0) * b).max(0.0)),
                    ("lyapunov_weighted_norm", Some(a), Some(b)) => Some((a - 2.0 * b).max(0.0)),
                    _ => None,
                };
                let matches_prediction = predicted.map(|e| if e == 0.0 { table.uniform() } else { table.matches_growth(e) });
                Some(RatioTable {
                    quantity: quantity.to_string(),
                    beta,
                    uniform: table.uniform(),
                    table,
                    predicted_exponent: predicted,
                    matches_prediction,
                })
            })
            .collect()
    }
}

fn links_csv(links: &[observability::ChainLink<f64>]) -> Csv {
    let mut csv = Csv::new(&["link", "pass", "value", "bound"]);
    for l in links {
        csv.raw(vec![l.name.to_string(), l.pass.to_string(), l.value.to_string(), l.bound.to_string()]);
    }
    csv
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// Writes `A`, and `B` and `A_B` when present, as Matrix Market files.
pub fn export_model(model: &Model, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", out.display())))?;
    let mut written = Vec::new();
    let mut put = |name: &str, m: &ComplexMatrix<f64>, comment: &str| -> Result<(), CliError> {
        let path = out.join(name);
        mtx::write(&path, m, Some(comment)).map_err(internal)?;
        written.push(path);
        Ok(())
    };
    match &model.system {
        Some(sys) => {
            put("A.mtx", sys.a.matrix(), "undamped generator A")?;
            put("B.mtx", &sys.b, "damping operator B")?;
            put("A_B.mtx", sys.a_b.matrix(), "damped generator A - B B*")?;
        }
        None => put("A.mtx", model.generator.matrix(), "generator A")?,
    }
    Ok(written)
}
