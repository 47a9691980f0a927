use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Bound formulas whose *sample-size* preconditions fail do not error; they
/// return a [`crate::theory::BoundCertificate`] with `precondition_ok = false`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid failure probability {0}: must lie in (0, 1]")]
    InvalidDelta(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("least-squares denominator is zero (all covariates vanish)")]
    ZeroDenominator,

    #[error("Gram matrix is numerically singular (min eigenvalue {min_eig:e}, max eigenvalue {max_eig:e})")]
    SingularGram { min_eig: f64, max_eig: f64 },

    #[error("deviation must be nonnegative, got {0}")]
    NegativeDeviation(f64),

    #[error("lambda = {lambda} is outside the MGF domain ({domain})")]
    DomainExceeded { lambda: f64, domain: &'static str },

    #[error("numerical integration did not converge: {0}")]
    IntegrationDivergence(String),

    #[error("direction is not a unit vector (norm {0})")]
    NotUnitVector(f64),

    #[error("block length k = {k} exceeds horizon T = {horizon}")]
    InvalidBlock { k: usize, horizon: usize },

    #[error("Gamma_max - Gamma_min is not PSD (min eigenvalue {0:e})")]
    NotOrdered(f64),

    #[error("spectral decay rate rho = {0} must lie in (0, 1)")]
    UnstableRho(f64),

    #[error("sigma_u must be positive for the B-error bound")]
    ZeroSigmaU,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("regularizer V is not positive definite")]
    SingularRegularizer,

    #[error("ordering condition V <= alpha * V_T fails (margin {margin:e})")]
    OrderingViolated { margin: f64 },

    #[error("value must be positive, got {0}")]
    NonPositiveValue(f64),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short stable identifier, used in JSON records of per-replicate failures.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidDelta(_) => "InvalidDelta",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::ZeroDenominator => "ZeroDenominator",
            Error::SingularGram { .. } => "SingularGram",
            Error::NegativeDeviation(_) => "NegativeDeviation",
            Error::DomainExceeded { .. } => "DomainExceeded",
            Error::IntegrationDivergence(_) => "IntegrationDivergence",
            Error::NotUnitVector(_) => "NotUnitVector",
            Error::InvalidBlock { .. } => "InvalidBlock",
            Error::NotOrdered(_) => "NotOrdered",
            Error::UnstableRho(_) => "UnstableRho",
            Error::ZeroSigmaU => "ZeroSigmaU",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::SingularRegularizer => "SingularRegularizer",
            Error::OrderingViolated { .. } => "OrderingViolated",
            Error::NonPositiveValue(_) => "NonPositiveValue",
            Error::Config { .. } => "Config",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
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
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}
