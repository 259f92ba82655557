use thiserror::Error;

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid grid {nx}x{ny}x{nz}: every extent must be positive")]
    InvalidGrid { nx: usize, ny: usize, nz: usize },

    #[error("point {point:?} lies outside the open unit cube")]
    Domain { point: [f64; 3] },

    /// A pivot or filtering coefficient became zero or non-finite.
    ///
    /// `level` is 1 for line pivots, 2 for the plane recurrence, 3 for the
    /// volume recurrence and 0 for the ILU0 factorization. `block` is the
    /// zero-based block index at that level and `row` the global row.
    #[error("factorization breakdown at level {level}, block {block}, row {row}: value {value}")]
    Factorization {
        level: u8,
        block: usize,
        row: usize,
        value: f64,
    },

    #[error("non-finite iterate at PCG iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("invalid band data: {0}")]
    InvalidBands(String),

    #[error("invalid worker count {0}")]
    Workers(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
