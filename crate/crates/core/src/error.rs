use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    /// Calibration matrix without full row rank.
    #[error("singular calibration configuration: {0}")]
    Singular(String),

    #[error("ambiguous peak: {0}")]
    AmbiguousPeak(String),

    #[error("undefined phase: sample {index} has zero magnitude")]
    UndefinedPhase { index: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the numbers rather than by the inputs' shape.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_)
                | Error::AmbiguousPeak(_)
                | Error::UndefinedPhase { .. }
                | Error::DegenerateGeometry(_)
        )
    }
}
