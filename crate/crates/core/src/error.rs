use thiserror::Error;

/// Errors produced by model construction, inference and learning.
#[derive(Debug, Error)]
pub enum Error {
    /// Sizes or indices do not agree with the model topology.
    #[error("structural error: {0}")]
    Structure(String),

    /// A value lies outside the domain of a function (negative probability, non-finite weight).
    #[error("domain error: {0}")]
    Domain(String),

    /// A gradient was requested at a point where it does not exist.
    #[error("gradient undefined: {0}")]
    GradientUndefined(String),

    /// The model admits no feasible structure (e.g. no perfect matching).
    #[error("infeasible model: {0}")]
    Infeasible(String),

    /// Input exceeds the size a brute-force or exact routine supports.
    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A linear-minimization call failed while processing one sample.
    #[error("MAP solver failed on sample {sample}: {source}")]
    Solver {
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    /// A checked mathematical relation did not hold.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn in_sample(self, sample: usize) -> Self {
        Error::Solver {
            sample,
            source: Box::new(self),
        }
    }
}
