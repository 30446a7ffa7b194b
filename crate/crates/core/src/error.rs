use thiserror::Error;

/// Errors produced by the tracking toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("{name} = {value} is outside the domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// A model parameter produces an invalid channel or configuration.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The output symbol has zero marginal probability, so the information
    /// density is undefined.
    #[error("information density undefined: output symbol {symbol} has zero marginal probability")]
    UndefinedDensity { symbol: u8 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// The hypothesis grid would exceed the configured decoding budget.
    #[error("hypothesis grid needs J = {hypotheses} hypotheses, budget is {budget}")]
    Budget { hypotheses: f64, budget: u64 },

    #[error("capacity-achieving set is empty")]
    EmptyCapacitySet,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            domain,
        }
    }

    /// Wraps the error with a short description of what was being attempted.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with all context layers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
