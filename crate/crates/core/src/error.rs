use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A state or gradient entry became NaN or infinite.
    #[error("divergence{}: non-finite value ({})", step_suffix(.step), .what)]
    Divergence {
        /// 1-based step index, when raised from inside a chain.
        step: Option<u64>,
        what: &'static str,
        theta: Vec<f64>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("feature index {index} exceeds dimension {dim} at line {line}")]
    Dimension { line: usize, index: usize, dim: usize },

    #[error("density estimate has no samples inside [{lo}, {hi}]")]
    EmptyEstimate { lo: f64, hi: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn step_suffix(step: &Option<u64>) -> String {
    match step {
        Some(s) => format!(" at step {s}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag used in CLI error lines and CSV rows.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Divergence { .. } => "divergence",
            Error::Parse { .. } => "parse",
            Error::Dimension { .. } => "dimension",
            Error::EmptyEstimate { .. } => "empty-estimate",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    /// Attaches a chain step index to a divergence error; other errors pass through.
    pub fn at_step(self, at: u64) -> Self {
        match self {
            Error::Divergence { what, theta, .. } => Error::Divergence { step: Some(at), what, theta },
            other => other,
        }
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. })
    }
}
