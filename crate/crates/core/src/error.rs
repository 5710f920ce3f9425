use thiserror::Error;

/// Errors produced anywhere in the estimation and simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LmarError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("circulant embedding is not positive semidefinite (min eigenvalue {min_eigenvalue:e}, max {max_eigenvalue:e})")]
    EmbeddingNotPsd {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("Toeplitz covariance is not positive semidefinite (n = {n}, failed after jitter {last_jitter:e})")]
    CovarianceNotPsd { n: usize, last_jitter: f64 },

    #[error("unsupported regime: H = {hurst} is outside (1/2, 3/4)")]
    UnsupportedRegime { hurst: f64 },

    #[error("truncation insufficient: {0}")]
    TruncationInsufficient(String),

    #[error("sample moment {value} is at or below f(theta_lo) = {lower}")]
    BelowRange { value: f64, lower: f64 },

    #[error("sample moment {value} is at or above f(theta_hi) = {upper}")]
    AboveRange { value: f64, upper: f64 },

    #[error("f(theta) is not strictly increasing for this noise model (first violation near theta = {theta})")]
    ModelNotMonotone { theta: f64 },

    #[error("every replicate was censored")]
    CensoredExperiment,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("contract violation: {0}")]
    ContractViolation(String),
}

impl LmarError {
    /// Stable variant name, printed by the CLI on failure.
    pub fn name(&self) -> &'static str {
        match self {
            LmarError::Domain(_) => "DomainError",
            LmarError::EmbeddingNotPsd { .. } => "EmbeddingNotPSD",
            LmarError::CovarianceNotPsd { .. } => "CovarianceNotPSD",
            LmarError::UnsupportedRegime { .. } => "UnsupportedRegime",
            LmarError::TruncationInsufficient(_) => "TruncationInsufficient",
            LmarError::BelowRange { .. } => "BelowRange",
            LmarError::AboveRange { .. } => "AboveRange",
            LmarError::ModelNotMonotone { .. } => "ModelNotMonotone",
            LmarError::CensoredExperiment => "CensoredExperiment",
            LmarError::InvalidConfig(_) => "InvalidConfig",
            LmarError::LengthMismatch { .. } => "LengthMismatch",
            LmarError::EmptyInput(_) => "EmptyInput",
            LmarError::ContractViolation(_) => "ContractViolation",
        }
    }

    /// True for out-of-range sample moments, which experiments record as censored.
    pub fn is_range_error(&self) -> bool {
        matches!(self, LmarError::BelowRange { .. } | LmarError::AboveRange { .. })
    }
}

pub type Result<T> = std::result::Result<T, LmarError>;

pub(crate) fn domain(msg: impl Into<String>) -> LmarError {
    LmarError::Domain(msg.into())
}
