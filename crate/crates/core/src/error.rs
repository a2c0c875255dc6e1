use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("initial density is not positive at node {index} (u = {value})")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error("initial density is not point-symmetric: u[{index}] = {left}, u[N-{index}] = {right}")]
    AsymmetricDatum { index: usize, left: f64, right: f64 },

    #[error("invalid Eulerian samples: {0}")]
    InvalidSamples(String),

    #[error("invalid Lagrangian grid: {0}")]
    InvalidGrid(String),

    #[error("g is not positive on cell {cell} (min value {value})")]
    NonPositiveG { cell: usize, value: f64 },

    #[error("particle label {label} outside (0, {mass})")]
    LabelOutOfRange { label: f64, mass: f64 },

    #[error("basis index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("BDF order {0} is not supported (use 1 or 2)")]
    UnsupportedOrder(usize),

    #[error("history holds {found} states, scheme needs {expected}")]
    HistoryLengthMismatch { expected: usize, found: usize },

    #[error("KKT matrix is singular")]
    SingularKkt,

    #[error("Newton iteration did not converge in {iterations} iterations (|G| = {residual:e}, update = {update:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        update: f64,
    },

    #[error("accepted state lost positivity on cell {cell} (min g = {value})")]
    PositivityLoss { cell: usize, value: f64 },

    #[error("exponent alpha = {0} must be negative")]
    InvalidExponent(f64),

    #[error("alpha = {0} is outside the validity range [-1, 0) of the reference rate")]
    OutOfValidityRange(f64),

    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),

    #[error("fit window contains no usable samples")]
    EmptyWindow,

    #[error("series contains non-positive values inside the fit window")]
    NonPositiveValues,

    #[error("need at least {needed} points to fit, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("densities carry different mass: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error comes from configuration/input validation rather than the solver.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::NonPositiveDensity { .. }
                | Error::AsymmetricDatum { .. }
                | Error::InvalidSamples(_)
                | Error::InvalidGrid(_)
                | Error::InvalidExponent(_)
                | Error::UnsupportedOrder(_)
        )
    }
}
