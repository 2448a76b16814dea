//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("Hermitian symmetry violated (relative deviation {deviation:.3e})")]
    SymmetryViolation { deviation: f64 },

    #[error("invalid cutoff profile: {0}")]
    InvalidProfile(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("CFL violation at t = {t}: dt = {dt:.3e} exceeds limit {limit:.3e}")]
    CflViolation { t: f64, dt: f64, limit: f64 },

    #[error("blow-up detected at t = {t}: {reason}")]
    BlowUp {
        t: f64,
        reason: String,
        /// Last state that still satisfied all invariants.
        last_good: Box<crate::solver::SolverState>,
    },

    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("run directory {0} already exists (pass force to overwrite)")]
    RunDirExists(String),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error("numerical identity violated: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
