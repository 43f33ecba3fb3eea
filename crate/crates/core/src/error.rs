use std::path::PathBuf;

use num_complex::Complex64;

/// Errors raised by the reduction toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("instance too large: {what} needs {size} entries, cap is {cap}")]
    InstanceTooLarge { what: &'static str, size: usize, cap: usize },

    #[error("shifted pencil sE - A is singular at s = {shift} (rcond estimate {rcond:.3e})")]
    ShiftAtEigenvalue { shift: Complex64, rcond: f64 },

    #[error("descriptor matrix E(p) is singular at p = {point:?} (rcond estimate {rcond:.3e})")]
    SingularDescriptor { point: Vec<f64>, rcond: f64 },

    #[error("degenerate basis: expected rank {expected}, found {found}")]
    DegenerateBasis { expected: usize, found: usize },

    #[error("coefficient `{tag}` returned a non-finite value at p = {point:?}")]
    CoefficientEvaluation { tag: String, point: Vec<f64> },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid interpolation data: {0}")]
    InvalidSpec(String),

    #[error("reduced descriptor W^T E(p) V is singular at p = {point:?} (rcond estimate {rcond:.3e})")]
    IllPosedReduction { point: Vec<f64>, rcond: f64 },

    #[error("every basis column was discarded by truncation")]
    AllColumnsDegenerate,

    #[error("snapshot matrix is zero; no POD basis can be formed")]
    EmptyBasis,

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("system is complex-valued (max imaginary part {max_imag:.3e}) and cannot be simulated in real arithmetic")]
    NonRealSystem { max_imag: f64 },

    #[error("factorization of E - dt*A failed: {0}")]
    Factorization(String),

    #[error("unknown coefficient tag `{0}`")]
    UnknownCoefficient(String),

    #[error("matrix market parse error in {path}: {msg}")]
    MatrixMarket { path: PathBuf, msg: String },

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
