use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid number of factors q={q} for p={p} variables (need 1 <= q < p)")]
    InvalidFactorCount { p: usize, q: usize },

    #[error("need more observations than variables (n={n}, p={p})")]
    TooFewObservations { n: usize, p: usize },

    #[error("input contains non-finite values")]
    NonFinite,

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is numerically singular (reciprocal condition {rcond:.3e})")]
    IllConditioned { rcond: f64 },

    #[error("unique variance {index} is not positive ({value})")]
    NonPositiveUniqueness { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
