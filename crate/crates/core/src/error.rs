use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A calibration table failed validation. `axis` names the offending curve.
    #[error("response table axis `{axis}`: {message}")]
    TableValidation { axis: String, message: String },

    #[error("{what} = {value} outside [{min}, {max}]")]
    OutOfRange {
        what: String,
        value: f64,
        min: f64,
        max: f64,
    },

    /// The evaluation point sits inside the core radius of defect `index`.
    #[error("defect {index} is {distance_nm:.4} nm from the evaluation point (core cutoff {cutoff_nm} nm)")]
    CoreRegion {
        index: usize,
        distance_nm: f64,
        cutoff_nm: f64,
    },

    #[error("inconsistent lifetimes: {0}")]
    Inconsistent(String),

    #[error("integration failed at t = {t}: {message}")]
    Integration { t: f64, message: String },

    #[error("fit did not converge after {iterations} iterations (residual norm {residual_norm:e})")]
    NonConvergence {
        iterations: usize,
        residual_norm: f64,
    },

    #[error("trace shows no decay: {0}")]
    NoDecay(String),

    #[error("no peak found: {0}")]
    NoPeak(String),

    #[error("half maximum is not crossed on both sides of the line")]
    UnboundedLine,

    #[error("trace has no rise: maximum is not preceded by lower samples")]
    NoRise,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid step {step} nm exceeds resolution limit {limit} nm")]
    Resolution { step: f64, limit: f64 },

    #[error("cannot histogram an empty ensemble")]
    EmptyHistogram,

    #[error("sampler exhausted: {0}")]
    SamplerExhausted(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerics (fits, integration, sampling) rather
    /// than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integration { .. }
                | Error::NonConvergence { .. }
                | Error::NoDecay(_)
                | Error::NoPeak(_)
                | Error::UnboundedLine
                | Error::NoRise
                | Error::Domain(_)
                | Error::Inconsistent(_)
                | Error::EmptyHistogram
                | Error::SamplerExhausted(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
