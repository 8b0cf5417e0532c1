use thiserror::Error;

/// Errors produced by model construction, sampling, solving and the closed forms.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdsError {
    /// A model or config field failed validation.
    #[error("invalid {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },

    /// Arguments outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent evaluation or solver configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The P_n curve never crosses the arrival CDF on the solver grid.
    #[error("no crossing between the success curve and the arrival CDF on the grid")]
    NoCrossing,

    /// A closed-form value fell outside [0, 1].
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl SdsError {
    pub(crate) fn field(field: &'static str, reason: impl Into<String>) -> Self {
        SdsError::InvalidField {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SdsError>;
