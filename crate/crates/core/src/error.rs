use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-finite iterate at inner iteration {iter}")]
    Divergence { iter: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("Gram matrix is singular; use a positive ridge")]
    SingularGram,
    #[error("vector is zero and has no direction")]
    ZeroVector,
    #[error("correlation has a zero denominator")]
    ZeroDenominator,
    #[error("true support is empty")]
    EmptySupport,
    #[error("columns are not orthonormal")]
    NotOrthonormal,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
