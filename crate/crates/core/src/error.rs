use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operator size mismatch: {left} vs {right} sites")]
    SizeMismatch { left: usize, right: usize },

    #[error("{what} supports at most {max} sites, got {got}")]
    Capacity { what: &'static str, max: usize, got: usize },

    #[error("{what} index {index} outside {min}..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        min: usize,
        max: usize,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("non-Hermitian input: {0}")]
    NonHermitian(String),

    /// The Lanczos sequence does not grow over the fit window.
    #[error("no operator growth: fitted slope {alpha} over window {n_min}..={n_max}")]
    NoGrowth { alpha: f64, n_min: usize, n_max: usize },

    /// The fluctuation signal vanishes identically (conserved operator or
    /// fully degenerate spectrum).
    #[error("no dynamics: {0}")]
    NoDynamics(String),

    /// Fewer crossings than requested were found before the time budget ran
    /// out. The crossings found so far are carried along.
    #[error("crossing search reached t = {t_reached} with {found} of {target} crossings")]
    Timeout {
        found: usize,
        target: usize,
        t_reached: f64,
        partial_crossings: Vec<f64>,
    },

    #[error("moment sequence inconsistent: Hankel determinant of order {order} is {value:e}")]
    MomentInconsistency { order: usize, value: f64 },

    /// A run finished but at least one of its computations did not succeed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("insufficient data: need {needed} usable points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("series are not aligned: {0}")]
    Alignment(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing {what}; {hint}")]
    MissingDependency { what: String, hint: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse(_) => 2,
            Error::MissingDependency { .. } => 4,
            _ => 3,
        }
    }
}
