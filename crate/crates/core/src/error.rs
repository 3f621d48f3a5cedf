use thiserror::Error;

/// Errors raised while building graphs, coins and walks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cycle requires n ≥ 3 (got {0})")]
    CycleTooSmall(usize),
    #[error("path requires n ≥ 2 (got {0})")]
    PathTooSmall(usize),
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("adjacency matrix is {rows}×{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("adjacency matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("invalid edge weight {weight} at ({row}, {col})")]
    InvalidWeight { row: usize, col: usize, weight: f64 },
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("operation requires an unweighted graph: {0}")]
    Weighted(&'static str),
    #[error("operation requires a graph without self loops")]
    HasLoops,

    #[error("coin dimension must be at least 1")]
    ZeroDimension,
    #[error("coin of dimension {coin} assigned to vertex {vertex} of degree {degree}")]
    CoinDimension { vertex: usize, degree: usize, coin: usize },
    #[error("matrix is not unitary (max |U†U − I| = {0:e})")]
    NotUnitary(f64),
    #[error("interpolating coin needs 1 ≤ t < d (got d = {d}, t = {t})")]
    TunnelCount { d: usize, t: usize },
    #[error("coupling c = {0} is outside [0, 1]")]
    CouplingRange(f64),
    #[error("no real continuous interpolating coin for d = {d}, t = {t}, c = {c}")]
    NoInterpolationBranch { d: usize, t: usize, c: f64 },
    #[error("policy {policy} cannot be applied: {reason}")]
    Policy { policy: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("serialization error: {0}")]
    Serde(String),
    #[error("numerical tolerance exceeded: {0}")]
    Tolerance(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
