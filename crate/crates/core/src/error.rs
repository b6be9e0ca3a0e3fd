use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("invariant violated: {what} (residual {residual:.3e}, tolerance {tolerance:.1e})")]
    Invariant {
        what: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("vector is not in the required subspace: residual {residual:.3e}")]
    Membership { residual: f64 },

    #[error("Fock dimension 2^{m} exceeds the configured limit {limit}")]
    FockTooLarge { m: usize, limit: usize },

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("cutoff {cutoff} too small: need at least {required}")]
    CutoffTooSmall { cutoff: usize, required: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("nerve is inconsistent: {0}")]
    Nerve(String),

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invariant(what: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Error::Invariant {
            what: what.into(),
            residual,
            tolerance,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
