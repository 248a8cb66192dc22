use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid must have at least {min} points, got {got}")]
    GridTooShort { min: usize, got: usize },
    #[error("grid must be strictly increasing from 0 to 1")]
    InvalidGrid,
    #[error("grid is not uniformly spaced")]
    NonUniformGrid,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },
    #[error("warping is not a valid reparameterization: {0}")]
    InvalidWarping(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("need at least {k} observations for {k} clusters, got {n}")]
    TooFewObservations { n: usize, k: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("requested {requested} components but only {available} are available")]
    TooManyComponents { requested: usize, available: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
