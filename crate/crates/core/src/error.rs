use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    ParamRange(String),

    #[error("{n} qubits exceeds the dense cap of {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("invalid qubit index set: {0}")]
    InvalidIndices(String),

    #[error("expected {expected} qubits, got {got}")]
    WrongQubitCount { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not a normalized state: {0}")]
    BadMatrix(String),

    #[error("state is not physical (min eigenvalue {0:e})")]
    Unphysical(f64),

    #[error("H_y(x) undefined for x = {x}, y = {y}")]
    Domain { x: f64, y: f64 },

    #[error("no analytic case applies: {0}")]
    NoAnalyticCase(String),

    #[error("region mismatch: {0}")]
    RegionMismatch(String),

    #[error("measurement level k = {k} invalid for {n} qubits")]
    InvalidLevel { k: usize, n: usize },

    #[error("measurement tree has {got} entries, expected {expected}")]
    IncompleteTree { expected: usize, got: usize },

    #[error("invalid Pauli word: {0}")]
    ParseWord(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
