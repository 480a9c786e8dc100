use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spline space: {0}")]
    InvalidSpace(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system: pivot {pivot:e} at row {row} (matrix scale {scale:e})")]
    Singular { row: usize, pivot: f64, scale: f64 },

    #[error("Newton iteration failed at step {step}: residual {residual:e} > tolerance {tolerance:e} after {iterations} iterations")]
    NewtonDivergence {
        step: usize,
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    /// A failure inside one Monte Carlo path, tagged with the path's seed and resolution.
    #[error("path {path} (seed {seed}, M = {steps}, N = {elements}): {source}")]
    Path {
        path: usize,
        seed: u64,
        steps: usize,
        elements: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("exponential moment overflowed (kappa = {kappa}): exponent {exponent:e}")]
    Overflow { kappa: f64, exponent: f64 },

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config {
            line: None,
            message: message.into(),
        }
    }

    /// Strips any [`Error::Path`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Path { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 2 config, 3 solver divergence, 4 invariant violation, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config { .. } | Error::InvalidSpace(_) | Error::InvalidArgument(_) => 2,
            Error::NewtonDivergence { .. } | Error::Singular { .. } | Error::Overflow { .. } => 3,
            Error::Invariant(_) => 4,
            _ => 1,
        }
    }

    /// Short machine-readable tag for error reports.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::InvalidSpace(_) => "invalid_space",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Singular { .. } => "singular",
            Error::NewtonDivergence { .. } => "newton_divergence",
            Error::Path { .. } => unreachable!(),
            Error::Overflow { .. } => "overflow",
            Error::Config { .. } => "config",
            Error::Invariant(_) => "invariant",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
