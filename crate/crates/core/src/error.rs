use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids (n={left_n}, L={left_len}) vs (n={right_n}, L={right_len})")]
    GridMismatch {
        left_n: usize,
        left_len: f64,
        right_n: usize,
        right_len: f64,
    },

    #[error("order {order} outside the supported range {min}..={max}")]
    OrderOutOfRange { order: usize, min: usize, max: usize },

    #[error("validity condition violated: eps^(1/2) * max|psi| = {margin:.6} exceeds {bound:.6}")]
    Validity { margin: f64, bound: f64 },

    #[error("m2 = {value:.3e} is not positive at node {index}")]
    NonPositiveM2 { index: usize, value: f64 },

    #[error("pointwise norm {norm:.3e} at node {index} fell below 0.5")]
    NormCollapse { index: usize, norm: f64 },

    #[error("invalid eps = {0}: must lie in (0, 1)")]
    InvalidEps(f64),

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    #[error("box half-width {actual:.3} is below the required {required:.3}")]
    BoxTooSmall { required: f64, actual: f64 },

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("time step {dt:.3e} exceeds the stability bound {bound:.3e}")]
    UnstableTimeStep { dt: f64, bound: f64 },

    #[error("integration aborted: {0}")]
    Aborted(Box<AbortReport>),

    #[error("trajectory index {index} unusable: {reason}")]
    TrajectoryIndex { index: usize, reason: String },

    #[error("cannot fit a slope: {0}")]
    InsufficientData(String),

    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("run for eps = {eps} failed: {source}")]
    Sweep {
        eps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Why a time integration stopped early.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbortReason {
    /// `eps^(1/2) max|psi|` reached the configured `validity_sigma`.
    ValidityBreach {
        margin: f64,
        sigma: f64,
    },
    /// Relative drift of the conserved energy exceeded the abort threshold.
    EnergyDrift {
        drift: f64,
        limit: f64,
    },
    /// Pre-renormalization pointwise norm dropped below 0.5.
    NormCollapse {
        index: usize,
        norm: f64,
    },
    NonFinite,
}

/// Structured report attached to an aborted integration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AbortReport {
    pub equation: String,
    pub reason: AbortReason,
    /// Time of the last accepted state.
    pub t: f64,
    pub step: usize,
    pub dt: f64,
    /// Stability bound computed for the run, for stiffness diagnosis.
    pub stability_bound: f64,
}

impl std::fmt::Display for AbortReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} stopped at t = {:.6} (step {}, dt = {:.3e}, stability bound {:.3e}): {:?}",
            self.equation, self.t, self.step, self.dt, self.stability_bound, self.reason
        )
    }
}
