use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Gram–Schmidt hit a column whose residual collapsed; the matrix is numerically singular.
    #[error("rank deficient: residual norm {residual:e} at column {column} is below tolerance")]
    RankDeficient { column: usize, residual: f64 },

    #[error("{0} is not a supported square QAM size (expected 4, 16, 64 or 256)")]
    NotSquareQam(usize),

    #[error("search space of {required} evaluations exceeds the budget of {budget}")]
    SearchSpaceTooLarge { required: u128, budget: u128 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
