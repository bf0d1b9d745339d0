//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("shape mismatch: {left:?} vs {right:?} ({context})")]
    ShapeMismatch {
        left: Vec<usize>,
        right: Vec<usize>,
        context: &'static str,
    },

    #[error("dtype mismatch: expected {expected}, got {got} ({context})")]
    DtypeMismatch {
        expected: &'static str,
        got: &'static str,
        context: &'static str,
    },

    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("no gradient recorded for parameter '{0}'")]
    MissingGrad(String),

    #[error("fields live on different grids: {0}")]
    GridMismatch(String),

    #[error("retained modes ({m1}, {m2}) exceed grid capacity for {n1}x{n2}")]
    ModesExceedGrid {
        m1: usize,
        m2: usize,
        n1: usize,
        n2: usize,
    },

    #[error("characteristic field is uniform; no interface to measure distance to")]
    UniformChi,

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("smoothing coefficient must be positive, got {0}")]
    NonPositiveBeta(f64),

    #[error("relative L2 undefined: reference field has zero norm")]
    ZeroNormTruth,

    #[error("solver failed to converge: {0}")]
    NonConvergence(String),

    #[error("numerical abort at {context} (last stable step {step})")]
    NumericalAbort { context: String, step: usize },

    #[error("container magic mismatch (not a DAFN1 file)")]
    ContainerMagic,

    #[error("container file truncated while reading {0}")]
    ContainerTruncated(&'static str),

    #[error("unknown container dtype code {0}")]
    ContainerUnknownDtype(u8),

    #[error("invalid configuration:\n{0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 usage, 3 numerical abort, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 2,
            Error::NumericalAbort { .. } | Error::NonConvergence(_) => 3,
            Error::Io(_)
            | Error::ContainerMagic
            | Error::ContainerTruncated(_)
            | Error::ContainerUnknownDtype(_) => 4,
            _ => 1,
        }
    }
}
