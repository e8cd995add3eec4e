//! Experiment harnesses: the eps-convergence study against the cubic
//! Schrodinger limit, the closed-form soliton convergence study, the
//! traveling-wave and conservation suites, and single runs. Configuration is
//! one JSON document; results are written as `report.json` plus `rows.csv`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    evolve_cs, evolve_ll, evolve_nls_eps, ll_stability_bound, AnisotropyParams, Equation, IntegratorConfig,
    StepDiagnostics,
};
use crate::energetics::k_eps_0;
use crate::error::{Error, Result};
use crate::fields::{magnetization_from_wavefield, EpsParam, Magnetization};
use crate::snapshot::{read_snapshot, Snapshot};
use crate::solitons::{
    cs_bright_soliton, first_order_correction, ll_soliton_case_i, ll_soliton_case_ii, ll_traveling_wave,
    profile_identity_residuals, tw_residual, upsilon_eps, CsSolitonParams, IdentityResiduals, SolitonCase,
    SolitonParams,
};
use crate::spectral::{sech, ComplexField, Grid, WaveField};

pub const SCHEMA_VERSION: u32 = 1;
pub const SLOPE_BAND: [f64; 2] = [0.85, 1.15];
/// Relative gap between `error/eps` and `|W|_{H^k}` accepted at the smallest eps.
pub const SOLITON_CONSTANT_TOLERANCE: f64 = 0.05;
pub const TRAVELING_WAVE_TOLERANCE: f64 = 1e-5;
pub const SOLITON_RESIDUAL_TOLERANCE: f64 = 1e-8;
pub const LL_DRIFT_THRESHOLD: f64 = 1e-3;
pub const DRIFT_THRESHOLD: f64 = 1e-6;
/// Fraction of the CFL-type bound used when a harness picks the LL step.
const LL_STEP_SAFETY: f64 = 0.9;
pub const THREADS_ENV: &str = "LL_LAB_THREADS";

// ---------------------------------------------------------------------------
// Configuration

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: 1024,
            half_width: 50.0,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::with_half_width(self.n, self.half_width)
    }
}

/// Initial wave field recipes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `amplitude sech(x / width) e^{i velocity x / 2}`.
    Sech {
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// `amplitude e^{-(x/width)^2} e^{i velocity x / 2}`.
    Gaussian {
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// Bright soliton of the cubic Schrodinger equation at `t = 0`.
    CsSoliton {
        #[serde(default)]
        c: f64,
        omega: f64,
    },
    /// A complex-field snapshot on the configured grid.
    Snapshot { path: PathBuf },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Sech {
            amplitude: 2.0,
            width: 1.0,
            velocity: 0.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

impl InitialData {
    pub fn build(&self, grid: &Grid) -> Result<WaveField> {
        let carrier = |v: f64, x: f64| Complex64::from_polar(1.0, 0.5 * v * x);
        match self {
            InitialData::Sech {
                amplitude,
                width,
                velocity,
            } => {
                check_width(*width)?;
                Ok(ComplexField::from_fn(grid, |x| {
                    carrier(*velocity, x) * (amplitude * sech(x / width))
                }))
            }
            InitialData::Gaussian {
                amplitude,
                width,
                velocity,
            } => {
                check_width(*width)?;
                Ok(ComplexField::from_fn(grid, |x| {
                    carrier(*velocity, x) * (amplitude * (-(x / width).powi(2)).exp())
                }))
            }
            InitialData::CsSoliton { c, omega } => {
                cs_bright_soliton(CsSolitonParams::new(*c, *omega)?, 0.0, grid)
            }
            InitialData::Snapshot { path } => match read_snapshot(path)? {
                Snapshot::Wave(w) => {
                    grid.check_same(w.grid())?;
                    Ok(w)
                }
                other => Err(Error::Snapshot(format!(
                    "{} holds a {} field, expected CPLX",
                    path.display(),
                    String::from_utf8_lossy(other.kind_tag())
                ))),
            },
        }
    }
}

fn check_width(w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("width = {w} must be positive")))
    }
}

/// Traveling-wave suite settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TravelingWaveSpec {
    pub params: SolitonParams,
    /// Anisotropy used by the solver; `None` uses the profile's own `lambda`.
    pub solver_lambda: Option<f64>,
    pub n: usize,
    pub t_end: f64,
}

impl Default for TravelingWaveSpec {
    fn default() -> Self {
        Self {
            params: SolitonParams::case_ii(1.0, 1.0, 0.0, 1.0).expect("admissible"),
            solver_lambda: None,
            n: 1024,
            t_end: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// One worker per eps (sequential when built without the `parallel` feature).
    #[default]
    Parallel,
    Sequential,
}

/// One study or run, as read from JSON. Only `schema_version` is required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub schema_version: u32,
    /// Strictly decreasing, each in `(0, 1)`.
    pub eps_list: Vec<f64>,
    /// Regularity index, `3..=6`; errors are measured in `H^{k-2}`
    /// (`H^k` for the soliton study).
    pub k: usize,
    pub grid: GridSpec,
    pub integrator: IntegratorConfig,
    /// Limit (cubic Schrodinger) data, and NLS_eps data unless overridden.
    pub initial_data: InitialData,
    /// NLS_eps data when it should differ from `initial_data`.
    pub eps_initial_data: Option<InitialData>,
    /// Equation for `simulate` and `conserve`.
    pub equation: Equation,
    /// `eps` for single runs.
    pub eps: f64,
    /// LL anisotropy for single runs; defaults to `1/eps` on both axes.
    pub anisotropy: Option<AnisotropyParams>,
    /// Soliton for the closed-form convergence study.
    pub soliton: CsSolitonParams,
    /// Time at which the soliton study compares profiles.
    pub soliton_t: f64,
    pub traveling_wave: TravelingWaveSpec,
    /// Constant in the smallness condition and horizon; reporting only.
    pub a_const: f64,
    pub sweep: SweepMode,
    pub output_dir: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            eps_list: vec![0.1, 0.05, 0.025, 0.0125],
            k: 3,
            grid: GridSpec::default(),
            integrator: IntegratorConfig::default(),
            initial_data: InitialData::default(),
            eps_initial_data: None,
            equation: Equation::NlsEps,
            eps: 0.1,
            anisotropy: None,
            soliton: CsSolitonParams::new(0.0, 1.0).expect("admissible"),
            soliton_t: 0.0,
            traveling_wave: TravelingWaveSpec::default(),
            a_const: 1.0,
            sweep: SweepMode::Parallel,
            output_dir: None,
        }
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

impl StudyConfig {
    /// Checks everything that serde cannot, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        if self.eps_list.is_empty() {
            return Err(schema("eps_list", "must not be empty"));
        }
        for (i, &e) in self.eps_list.iter().enumerate() {
            if !(e > 0.0 && e < 1.0) {
                return Err(schema(format!("eps_list[{i}]"), format!("{e} is outside (0, 1)")));
            }
        }
        if let Some(i) = self.eps_list.windows(2).position(|w| !(w[1] < w[0])) {
            return Err(schema(
                "eps_list",
                format!(
                    "must be strictly decreasing, but entry {} does not drop below entry {i}",
                    i + 1
                ),
            ));
        }
        if !(3..=6).contains(&self.k) {
            return Err(schema("k", format!("{} is outside 3..=6", self.k)));
        }
        if self.grid.n < 8 || !self.grid.n.is_multiple_of(2) {
            return Err(schema(
                "grid.n",
                format!("{} must be even and at least 8", self.grid.n),
            ));
        }
        if !(self.grid.half_width > 0.0 && self.grid.half_width.is_finite()) {
            return Err(schema("grid.half_width", "must be positive"));
        }
        self.integrator
            .validate()
            .map_err(|e| schema("integrator", e.to_string()))?;
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(schema("eps", format!("{} is outside (0, 1)", self.eps)));
        }
        if !(self.a_const > 0.0 && self.a_const.is_finite()) {
            return Err(schema("a_const", "must be positive"));
        }
        if !self.soliton_t.is_finite() {
            return Err(schema("soliton_t", "must be finite"));
        }
        let tw = &self.traveling_wave;
        if tw.n < 8 || !tw.n.is_multiple_of(2) {
            return Err(schema(
                "traveling_wave.n",
                format!("{} must be even and at least 8", tw.n),
            ));
        }
        if !(tw.t_end > 0.0 && tw.t_end.is_finite()) {
            return Err(schema("traveling_wave.t_end", "must be positive"));
        }
        if let Some(l) = tw.solver_lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(schema("traveling_wave.solver_lambda", "must be non-negative"));
            }
        }
        Ok(())
    }

    fn eps_param(&self) -> Result<EpsParam> {
        EpsParam::new(self.eps)
    }
}

/// Parses and validates a config document.
pub fn parse_config_str(text: &str) -> Result<StudyConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| schema(".", e.to_string()))?;
    if value.get("schema_version").is_none() {
        return Err(schema("schema_version", "missing field"));
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: StudyConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(
            if path.is_empty() { ".".to_string() } else { path },
            e.into_inner().to_string(),
        )
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<StudyConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

// ---------------------------------------------------------------------------
// Reports and emission

/// Anything written as `report.json` plus `rows.csv`.
pub trait Report: Serialize + DeserializeOwned {
    type Row: Serialize;
    fn rows(&self) -> &[Self::Row];
    fn passed(&self) -> bool;
}

/// Writes `report.json` and `rows.csv` into `dir`, creating it if needed.
pub fn emit_report<R: Report>(report: &R, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    let csv_path = dir.join("rows.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    for row in report.rows() {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    Ok((json_path, csv_path))
}

/// Reads back the `report.json` written by [`emit_report`].
pub fn read_report<R: Report>(dir: impl AsRef<Path>) -> Result<R> {
    let path = dir.as_ref().join("report.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub error_norm: f64,
    /// `H^s` with the index used, e.g. `H1`.
    pub norm_kind: String,
    /// Wall-clock seconds for this eps; the only field that differs between
    /// re-runs.
    pub runtime_s: f64,
    pub error_over_eps: f64,
    /// `|W|_{H^k}` (soliton study only).
    pub limit_constant: Option<f64>,
    pub k_eps_0: Option<f64>,
    pub t_eps_lower: Option<f64>,
    pub energy_drift: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub study: String,
    /// In the order of `eps_list`, i.e. decreasing eps.
    pub rows: Vec<ConvergenceRow>,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    pub slope_band: [f64; 2],
    pub pass: bool,
    /// `|psi_eps0 - psi0|_{H^{k-2}}`.
    pub initial_gap: f64,
    /// Errors stay at or above half the initial gap, so the eps-rate is
    /// masked by the data mismatch.
    pub floor_detected: bool,
    /// Some eps has `t_end` beyond `1/(A K^2)`. Reported, not enforced.
    pub horizon_exceeded: bool,
    /// `|error/eps - |W|| / |W|` at the smallest eps (soliton study).
    pub limit_deviation: Option<f64>,
    /// The deviation shrinks along the eps list (soliton study).
    pub monotone: Option<bool>,
    pub config: StudyConfig,
}

impl Report for ConvergenceReport {
    type Row = ConvergenceRow;
    fn rows(&self) -> &[ConvergenceRow] {
        &self.rows
    }
    fn passed(&self) -> bool {
        self.pass
    }
}

/// Least-squares slope of `log error` against `log eps`, with its standard
/// error (0 for two points).
pub fn fit_slope(eps: &[f64], errors: &[f64]) -> Result<(f64, f64)> {
    if eps.len() != errors.len() {
        return Err(Error::InsufficientData(format!(
            "{} eps values against {} errors",
            eps.len(),
            errors.len()
        )));
    }
    if eps.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least two eps values, got {}",
            eps.len()
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InsufficientData(format!("error {e} has no logarithm")));
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all eps values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let stderr = if xs.len() > 2 {
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
            .sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, stderr))
}

// ---------------------------------------------------------------------------
// Sweeps

fn thread_override() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::InvalidConfig(format!(
                "{THREADS_ENV} = {v:?} is not a positive integer"
            ))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `f` once per eps, preserving order. In parallel mode the worker
/// count is capped by `LL_LAB_THREADS` when set.
pub fn sweep<T, F>(eps_list: &[f64], mode: SweepMode, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> Result<T> + Sync + Send,
{
    let wrap = |e: f64| {
        f(e).map_err(|source| Error::Sweep {
            eps: e,
            source: Box::new(source),
        })
    };
    match mode {
        SweepMode::Sequential => eps_list.iter().map(|&e| wrap(e)).collect(),
        SweepMode::Parallel => parallel_map(eps_list, &wrap),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(eps_list: &[f64], f: &F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> Result<T> + Sync,
{
    use rayon::prelude::*;
    let run = || eps_list.par_iter().map(|&e| f(e)).collect::<Vec<_>>();
    let results = match thread_override()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    results.into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(eps_list: &[f64], f: &F) -> Result<Vec<T>>
where
    F: Fn(f64) -> Result<T>,
{
    thread_override()?;
    eps_list.iter().map(|&e| f(e)).collect()
}

// ---------------------------------------------------------------------------
// Studies

/// Runs NLS_eps for every eps and the cubic Schrodinger equation once, from
/// the configured data, and fits the rate of `|psi_eps(t_end) - psi(t_end)|_{H^{k-2}}`.
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    if cfg.eps_list.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least two eps values, got {}",
            cfg.eps_list.len()
        )));
    }
    let grid = cfg.grid.build()?;
    let psi0 = cfg.initial_data.build(&grid)?;
    let psi_eps0 = match &cfg.eps_initial_data {
        Some(d) => d.build(&grid)?,
        None => psi0.clone(),
    };
    let s = cfg.k - 2;
    let limit = evolve_cs(&psi0, &cfg.integrator)?;
    let limit_final = limit.final_state();
    let rows = sweep(&cfg.eps_list, cfg.sweep, |e| {
        let eps = EpsParam::new(e)?;
        let start = Instant::now();
        let traj = evolve_nls_eps(&psi_eps0, eps, &cfg.integrator)?;
        let error_norm = traj.final_state().sub(limit_final)?.sobolev_norm(s, false)?;
        let runtime_s = start.elapsed().as_secs_f64();
        let kr = k_eps_0(&psi0, &psi_eps0, eps, cfg.k, cfg.a_const)?;
        Ok(ConvergenceRow {
            eps: e,
            error_norm,
            norm_kind: format!("H{s}"),
            runtime_s,
            error_over_eps: error_norm / e,
            limit_constant: None,
            k_eps_0: Some(kr.k_eps_0),
            t_eps_lower: kr.t_eps_lower,
            energy_drift: Some(traj.max_energy_drift()),
        })
    })?;
    let errors: Vec<f64> = rows.iter().map(|r| r.error_norm).collect();
    let initial_gap = psi_eps0.sub(&psi0)?.sobolev_norm(s, false)?;
    let floor_detected =
        initial_gap > 0.0 && errors.iter().cloned().fold(f64::INFINITY, f64::min) >= 0.5 * initial_gap;
    let (fitted_slope, slope_stderr) = fit_slope(&cfg.eps_list, &errors)?;
    let t_end = cfg.integrator.t_end;
    let horizon_exceeded = rows.iter().any(|r| r.t_eps_lower.is_some_and(|h| t_end > h));
    Ok(ConvergenceReport {
        study: "convergence".into(),
        rows,
        fitted_slope,
        slope_stderr,
        slope_band: SLOPE_BAND,
        pass: (SLOPE_BAND[0]..=SLOPE_BAND[1]).contains(&fitted_slope),
        initial_gap,
        floor_detected,
        horizon_exceeded,
        limit_deviation: None,
        monotone: None,
        config: cfg.clone(),
    })
}

/// Compares the exact NLS_eps soliton with the cubic Schrodinger soliton in
/// `H^k` at `cfg.soliton_t`, without time stepping.
pub fn run_soliton_convergence(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let p = cfg.soliton;
    if p.c() < 0.0 {
        return Err(Error::Inadmissible(format!("c = {} must be non-negative", p.c())));
    }
    let grid = cfg.grid.build()?;
    let t = cfg.soliton_t;
    let limit = cs_bright_soliton(p, t, &grid)?;
    let w_norm = first_order_correction(p.c(), p.omega(), &grid)?.sobolev_norm(cfg.k, false)?;
    let rows = sweep(&cfg.eps_list, cfg.sweep, |e| {
        let eps = EpsParam::new(e)?;
        let start = Instant::now();
        let exact = upsilon_eps(p.c(), p.omega(), eps, t, &grid)?;
        let error_norm = exact.sub(&limit)?.sobolev_norm(cfg.k, false)?;
        Ok(ConvergenceRow {
            eps: e,
            error_norm,
            norm_kind: format!("H{}", cfg.k),
            runtime_s: start.elapsed().as_secs_f64(),
            error_over_eps: error_norm / e,
            limit_constant: Some(w_norm),
            k_eps_0: None,
            t_eps_lower: None,
            energy_drift: None,
        })
    })?;
    let deviations: Vec<f64> = rows
        .iter()
        .map(|r| (r.error_over_eps - w_norm).abs() / w_norm)
        .collect();
    let limit_deviation = *deviations.last().expect("eps_list is non-empty");
    let monotone = deviations.windows(2).all(|w| w[1] <= w[0]);
    let errors: Vec<f64> = rows.iter().map(|r| r.error_norm).collect();
    let (fitted_slope, slope_stderr) = if rows.len() >= 2 {
        fit_slope(&cfg.eps_list, &errors)?
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ConvergenceReport {
        study: "soliton_convergence".into(),
        rows,
        fitted_slope,
        slope_stderr,
        slope_band: SLOPE_BAND,
        pass: limit_deviation < SOLITON_CONSTANT_TOLERANCE && monotone,
        initial_gap: 0.0,
        floor_detected: false,
        horizon_exceeded: false,
        limit_deviation: Some(limit_deviation),
        monotone: Some(monotone),
        config: cfg.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelingWaveRow {
    pub t: f64,
    pub deviation: f64,
    pub energy_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelingWaveReport {
    pub params: SolitonParams,
    pub solver_lambda: f64,
    pub n: usize,
    pub half_width: f64,
    pub dt: f64,
    pub t_end: f64,
    /// L2 distance between the computed and exact wave at `t_end`.
    pub deviation: f64,
    pub energy_drift: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub rows: Vec<TravelingWaveRow>,
    pub config: StudyConfig,
}

impl Report for TravelingWaveReport {
    type Row = TravelingWaveRow;
    fn rows(&self) -> &[TravelingWaveRow] {
        &self.rows
    }
    fn passed(&self) -> bool {
        self.pass
    }
}

fn ll_config(base: &IntegratorConfig, grid: &Grid, a: &AnisotropyParams, t_end: f64) -> IntegratorConfig {
    let mut cfg = *base;
    cfg.t_end = t_end;
    cfg.dt = cfg.dt.min(LL_STEP_SAFETY * ll_stability_bound(grid, a));
    cfg
}

/// Runs LL from an exact traveling wave and measures the distance to the
/// exact solution. The box is sized from the profile's decay and travel.
pub fn run_traveling_wave_suite(cfg: &StudyConfig) -> Result<TravelingWaveReport> {
    cfg.validate()?;
    let tw = cfg.traveling_wave;
    let p = tw.params;
    let half_width = p.required_half_width() + p.c().abs() * tw.t_end + 1.0;
    let grid = Grid::with_half_width(tw.n, half_width)?;
    let solver_lambda = tw.solver_lambda.unwrap_or(p.lambda());
    let a = AnisotropyParams::uniform(solver_lambda)?;
    let icfg = ll_config(&cfg.integrator, &grid, &a, tw.t_end);
    let m0 = ll_traveling_wave(&p, 0.0, &grid)?;
    let traj = evolve_ll(&m0, &a, &icfg)?;
    let mut rows = Vec::with_capacity(traj.states.len());
    for (t, m) in traj.times.iter().zip(&traj.states) {
        let exact = ll_traveling_wave(&p, *t, &grid)?;
        let step = (t / traj.dt).round() as usize;
        rows.push(TravelingWaveRow {
            t: *t,
            deviation: m.sub(&exact)?.l2_norm(),
            energy_drift: traj.diagnostics[step].energy_drift,
        });
    }
    let deviation = rows.last().expect("initial state is stored").deviation;
    let energy_drift = traj.max_energy_drift();
    Ok(TravelingWaveReport {
        params: p,
        solver_lambda,
        n: tw.n,
        half_width,
        dt: traj.dt,
        t_end: tw.t_end,
        deviation,
        energy_drift,
        tolerance: TRAVELING_WAVE_TOLERANCE,
        pass: deviation < TRAVELING_WAVE_TOLERANCE && energy_drift < LL_DRIFT_THRESHOLD,
        rows,
        config: cfg.clone(),
    })
}

/// Summary of a single run. `rows` holds the per-step diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub equation: Equation,
    pub eps: Option<f64>,
    pub dt: f64,
    pub steps: usize,
    pub stability_bound: f64,
    pub t_end: f64,
    pub energy_drift: f64,
    pub mass_drift: Option<f64>,
    pub max_norm_defect: Option<f64>,
    pub energy_threshold: f64,
    pub mass_threshold: Option<f64>,
    /// Drifts within the thresholds.
    pub pass: bool,
    pub rows: Vec<StepDiagnostics>,
    pub config: StudyConfig,
}

impl Report for RunReport {
    type Row = StepDiagnostics;
    fn rows(&self) -> &[StepDiagnostics] {
        &self.rows
    }
    fn passed(&self) -> bool {
        self.pass
    }
}

/// Initial and final states of a single run.
pub struct RunOutput {
    pub report: RunReport,
    pub initial: Snapshot,
    pub last: Snapshot,
}

fn run_single(cfg: &StudyConfig, icfg: &IntegratorConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let psi0 = cfg.initial_data.build(&grid)?;
    let eq = cfg.equation;
    let (traj_meta, initial, last, eps) = match eq {
        Equation::Ll => {
            let eps = cfg.eps_param()?;
            let a = cfg.anisotropy.unwrap_or(AnisotropyParams::from_eps(eps));
            let m0: Magnetization = magnetization_from_wavefield(&psi0, eps, 0.0)?;
            let run_cfg = ll_config(icfg, &grid, &a, icfg.t_end);
            let traj = evolve_ll(&m0, &a, &run_cfg)?;
            let last = Snapshot::Magnetization(traj.final_state().clone());
            (meta(&traj), Snapshot::Magnetization(m0), last, Some(cfg.eps))
        }
        Equation::NlsEps => {
            let eps = cfg.eps_param()?;
            let traj = evolve_nls_eps(&psi0, eps, icfg)?;
            let last = Snapshot::Wave(traj.final_state().clone());
            (meta(&traj), Snapshot::Wave(psi0), last, Some(cfg.eps))
        }
        Equation::Cs => {
            let traj = evolve_cs(&psi0, icfg)?;
            let last = Snapshot::Wave(traj.final_state().clone());
            (meta(&traj), Snapshot::Wave(psi0), last, None)
        }
    };
    let (dt, steps, bound, diagnostics, energy_drift, mass_drift, norm_defect) = traj_meta;
    let energy_threshold = if eq == Equation::Ll {
        LL_DRIFT_THRESHOLD
    } else {
        DRIFT_THRESHOLD
    };
    let mass_threshold = (eq == Equation::Cs).then_some(DRIFT_THRESHOLD);
    let pass = energy_drift <= energy_threshold
        && match (mass_drift, mass_threshold) {
            (Some(d), Some(l)) => d <= l,
            _ => true,
        };
    Ok(RunOutput {
        report: RunReport {
            equation: eq,
            eps,
            dt,
            steps,
            stability_bound: bound,
            t_end: icfg.t_end,
            energy_drift,
            mass_drift,
            max_norm_defect: norm_defect,
            energy_threshold,
            mass_threshold,
            pass,
            rows: diagnostics,
            config: cfg.clone(),
        },
        initial,
        last,
    })
}

type TrajMeta = (
    f64,
    usize,
    f64,
    Vec<StepDiagnostics>,
    f64,
    Option<f64>,
    Option<f64>,
);

fn meta<S>(traj: &crate::dynamics::Trajectory<S>) -> TrajMeta {
    (
        traj.dt,
        traj.diagnostics.len() - 1,
        traj.stability_bound,
        traj.diagnostics.clone(),
        traj.max_energy_drift(),
        traj.max_mass_drift(),
        traj.max_norm_defect(),
    )
}

/// A single run with the configured abort thresholds. LL steps are capped at
/// 0.9 of the stability bound.
pub fn run_simulation(cfg: &StudyConfig) -> Result<RunOutput> {
    run_single(cfg, &cfg.integrator)
}

/// A single run that never aborts on drift and reports the conserved
/// quantities against fixed budgets: `1e-3` for `E_LL` (with per-step
/// renormalization) and `1e-6` for the NLS_eps energy, `M2` and `E_CS`.
pub fn run_conservation_suite(cfg: &StudyConfig) -> Result<RunReport> {
    let icfg = cfg.integrator.with_max_energy_drift(None);
    Ok(run_single(cfg, &icfg)?.report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonRow {
    pub profile_residual: f64,
    pub phase_residual: f64,
    pub gradient_identity: f64,
    pub momentum_identity: f64,
    pub v2_derivative_identity: f64,
    pub v2_at_zero: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonReport {
    pub params: SolitonParams,
    pub n: usize,
    pub half_width: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub rows: Vec<SolitonRow>,
    pub config: StudyConfig,
}

impl Report for SolitonReport {
    type Row = SolitonRow;
    fn rows(&self) -> &[SolitonRow] {
        &self.rows
    }
    fn passed(&self) -> bool {
        self.pass
    }
}

/// Samples the configured LL profile and checks it against the
/// traveling-wave system and the first-integral identities.
pub fn run_soliton_check(cfg: &StudyConfig) -> Result<(SolitonReport, Magnetization)> {
    cfg.validate()?;
    let p = cfg.traveling_wave.params;
    let n = cfg.traveling_wave.n;
    let half_width = p.required_half_width() + 1.0;
    let grid = Grid::with_half_width(n, half_width)?;
    let profile = match p.case() {
        SolitonCase::I => ll_soliton_case_i(p.lambda(), p.delta(), &grid)?,
        SolitonCase::II => ll_soliton_case_ii(&p, &grid)?,
    };
    let (r1, r2) = tw_residual(&profile, &p)?;
    let IdentityResiduals {
        gradient,
        momentum,
        v2_derivative,
        v2_at_zero,
    } = profile_identity_residuals(&profile, &p)?;
    let tol = SOLITON_RESIDUAL_TOLERANCE;
    let pass = [r1, r2, gradient, momentum, v2_derivative]
        .iter()
        .all(|r| *r < tol)
        && v2_at_zero.is_none_or(|v| v < 1e-10);
    Ok((
        SolitonReport {
            params: p,
            n,
            half_width,
            tolerance: tol,
            pass,
            rows: vec![SolitonRow {
                profile_residual: r1,
                phase_residual: r2,
                gradient_identity: gradient,
                momentum_identity: momentum,
                v2_derivative_identity: v2_derivative,
                v2_at_zero,
            }],
            config: cfg.clone(),
        },
        profile,
    ))
}
