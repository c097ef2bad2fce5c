use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("non-finite log-likelihood {value} at {position:?}")]
    NonFiniteLikelihood { value: f64, position: Vec<f64> },

    #[error("particle {particle} exhausted {restarts} restarts without an in-slice trajectory point (barrier {barrier})")]
    RestartsExhausted {
        particle: usize,
        restarts: usize,
        barrier: f64,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
