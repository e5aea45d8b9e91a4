use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the domain of a formula (e.g. `ln` of a value <= 1).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured resource ceiling (sieve size, modulus width, tuple budget) was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Truncated p-adic arithmetic ran out of precision.
    #[error("precision exhausted: {message} (need precision >= {required})")]
    Precision { message: String, required: u32 },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    /// Enumeration window too small to contain the analytic minimizer.
    #[error("window too narrow: n_max = {n_max} does not exceed the minimizer {minimizer:.4}")]
    WidenWindow { n_max: u64, minimizer: f64 },

    /// The brute-force enumerator would exceed its tuple budget.
    #[error("tuple budget exceeded: {required} evaluations needed, budget is {budget}")]
    Budget { required: u128, budget: u128 },

    /// Inconsistent or malformed input data.
    #[error("invalid input: {0}")]
    Input(String),

    /// A descriptor violated a named invariant.
    #[error("validation failed [{invariant}]: {message}")]
    Validation { invariant: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn validation(invariant: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            invariant: invariant.to_string(),
            message: message.into(),
        }
    }
}
