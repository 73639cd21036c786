use thiserror::Error;

/// Errors raised by every layer of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension budget exceeded: {requested} > {limit}")]
    DimensionBudget { requested: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid subsystem index {index} (system has {count} factors)")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("indistinguishable hypotheses: eps1 ({eps1}) must be strictly below eps2 ({eps2})")]
    IndistinguishableHypotheses { eps1: f64, eps2: f64 },

    #[error("infinite divergence D({a}||{b})")]
    InfiniteDivergence { a: f64, b: f64 },

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("missing robustness constant: {0}")]
    MissingConstant(String),

    #[error("source exhausted after {0} rounds")]
    SourceExhausted(usize),

    #[error("no certificate remains: {0}")]
    NoCertificateRemains(String),

    #[error("non-IID sources cannot be certified")]
    NonIidCertification,

    #[error("io: {0}")]
    Io(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// Short stable identifier used in machine-readable CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionBudget { .. } => "dimension-budget",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::InvalidSubsystem { .. } => "invalid-subsystem",
            Error::InvalidState(_) => "invalid-state",
            Error::InvalidMeasurement(_) => "invalid-measurement",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::IndistinguishableHypotheses { .. } => "indistinguishable-hypotheses",
            Error::InfiniteDivergence { .. } => "infinite-divergence",
            Error::UnknownName(_) => "unknown-name",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::MissingConstant(_) => "missing-constant",
            Error::SourceExhausted(_) => "source-exhausted",
            Error::NoCertificateRemains(_) => "no-certificate",
            Error::NonIidCertification => "non-iid-certification",
            Error::Io(_) => "io",
            Error::Serialization(_) => "serialization",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
