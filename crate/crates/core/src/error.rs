use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A function was evaluated outside its mathematical domain.
    #[error("domain error in {function}: {reason}")]
    Domain { function: &'static str, reason: String },

    #[error("topology error: {0}")]
    Topology(String),

    /// The variance of a moment pair is not positive, so no gamma law matches it.
    #[error("degenerate distribution: variance {variance:e} is not positive")]
    Degenerate { variance: f64 },

    #[error("numeric failure in {context}: {reason}")]
    Numeric { context: &'static str, reason: String },

    #[error("quadrature did not converge on [{lower:e}, {upper:e}]: estimate {estimate:e}, error {error:e} after {evaluations} evaluations")]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        error: f64,
        evaluations: usize,
    },
}

impl Error {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(function: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            function,
            reason: reason.into(),
        }
    }

    pub(crate) fn numeric(context: &'static str, reason: impl Into<String>) -> Self {
        Error::Numeric {
            context,
            reason: reason.into(),
        }
    }
}
