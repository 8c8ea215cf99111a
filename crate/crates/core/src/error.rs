use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bad permutation: {0}")]
    BadPermutation(String),
    #[error("not a permutation of 1..m")]
    NotAPermutation,
    #[error("trace norm {norm} exceeds 1")]
    TraceNormExceeded { norm: f64 },
    #[error("game matrix is zero")]
    ZeroGame,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("dense representation too large: {amplitudes} amplitudes (limit {limit})")]
    TooLarge { amplitudes: u128, limit: u128 },
    #[error("invalid argument: {0}")]
    BadArgs(String),
    #[error("game is not invariant under swapping the players")]
    NotSwapSymmetric,
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("SDP is infeasible: {0}")]
    Infeasible(String),
    #[error("SDP is unbounded: {0}")]
    Unbounded(String),
    #[error("SDP solver hit the iteration limit ({iterations}) with gap {gap:.3e}")]
    MaxIterations { iterations: usize, gap: f64 },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
