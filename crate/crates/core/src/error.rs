use thiserror::Error;

/// Errors raised anywhere in the pricing engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical precondition (CFL bound, interpolation margin) does not hold.
    #[error("numerical precondition violated: {0}")]
    Precondition(String),

    #[error("certification failed: {what}: observed {observed} exceeds declared {declared} (witness {witness:?})")]
    Certification {
        what: String,
        observed: f64,
        declared: f64,
        witness: Vec<Vec<f64>>,
    },

    #[error("gradient vanishes; the limit operator is undefined at p = 0, use f_envelopes")]
    GradientDegenerate,

    #[error("node {0:?} is not strictly interior")]
    OutOfDomain(Vec<usize>),

    #[error("strategy contract violated at x = {x:?}, t = {t}: {reason}")]
    StrategyContract { x: Vec<f64>, t: f64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::Json(_) => 2,
            Error::Precondition(_) => 3,
            Error::Certification { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
