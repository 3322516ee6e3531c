use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("divergent deconvolution: arrival tail slope exceeds service tail slope")]
    DivergentDeconvolution,
    #[error("curve is not nonnegative and wide-sense increasing: {0}")]
    NotInF(String),
    #[error("undefined extended-real arithmetic (+inf - +inf)")]
    UndefinedArithmetic,
    #[error("empty or malformed grid")]
    EmptyGrid,
    #[error("model variant mismatch: {0}")]
    VariantMismatch(String),
    #[error("illegal strengthening from {from} to {to}")]
    IllegalStrengthening { from: String, to: String },
    #[error("rate {r} must exceed rho(theta) = {rho}")]
    RateTooSmall { r: f64, rho: f64 },
    #[error("no feasible theta in candidate grid")]
    NoFeasibleTheta,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("trace horizon {len} too short for d_max {d_max}")]
    InsufficientHorizon { len: usize, d_max: usize },
    #[error("report and empirical tail use different x grids")]
    GridMismatch,
    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DivergentDeconvolution => "DivergentDeconvolution",
            Error::NotInF(_) => "NotInF",
            Error::UndefinedArithmetic => "UndefinedArithmetic",
            Error::EmptyGrid => "EmptyGrid",
            Error::VariantMismatch(_) => "VariantMismatch",
            Error::IllegalStrengthening { .. } => "IllegalStrengthening",
            Error::RateTooSmall { .. } => "RateTooSmall",
            Error::NoFeasibleTheta => "NoFeasibleTheta",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::InsufficientHorizon { .. } => "InsufficientHorizon",
            Error::GridMismatch => "GridMismatch",
            Error::UnsupportedTopology(_) => "UnsupportedTopology",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}
