use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("variable index {index} is not declared ({context})")]
    UndeclaredVariable { index: usize, context: String },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("log term weight {0} makes the objective non-concave for the declared sense")]
    NonConvexLogTerm(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("eigensolver did not converge")]
    EigenFailure,
    #[error("backend rejected the problem: {0}")]
    Backend(String),
}
