use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("signed measure has mass {mass} at {point:?}, where the base measure has none")]
    AbsoluteContinuity { point: Vec<f64>, mass: f64 },

    #[error("theta {theta:?} lies outside the declared domain of family `{family}`")]
    Domain { family: String, theta: Vec<f64> },

    #[error("log-partition overflowed at theta {theta:?}")]
    Overflow { theta: Vec<f64> },

    #[error("matrix is numerically singular: smallest eigenvalue {min_eigenvalue:e} < {floor:e}")]
    Rank { min_eigenvalue: f64, floor: f64 },

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("bad parameter for family `{family}`: {reason}")]
    BadParam { family: String, reason: String },

    #[error("support grew to {size} points, above the cap of {cap}")]
    SupportBlowup { size: usize, cap: usize },

    #[error("tangent vectors are based at different points")]
    BasePointMismatch,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
