use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("adjacency matrix is reducible")]
    Reducible,
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("matrix is not hyperbolic: {0}")]
    NotHyperbolic(String),
    #[error("invalid periodic orbit: {0}")]
    InvalidOrbit(String),
    #[error("periodic orbits P and Q intersect")]
    OrbitsIntersect,
    #[error("delta {delta} too large: enlarged diameter {diam} exceeds eps'_X = {bound}")]
    DeltaTooLarge { delta: f64, diam: f64, bound: f64 },
    #[error("no admissible sample point for cell {0}; raise the enumeration cap")]
    CellExhausted(String),
    #[error("power iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
