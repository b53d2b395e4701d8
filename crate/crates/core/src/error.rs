use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FridgeError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid qubit label {0} (expected 1, 2 or 3)")]
    InvalidQubit(usize),
    #[error("not a density matrix: {0}")]
    InvalidState(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("stationary state is not unique (singular value ratio {ratio:.3e})")]
    DegenerateKernel { ratio: f64 },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("temperature undefined: {0}")]
    UndefinedTemperature(String),
    #[error("undefined quantity: {0}")]
    Undefined(String),
    #[error("no valid GHZ decomposition (weight {0} >= 1)")]
    NoDecomposition(f64),
    #[error("probe radius too large: {0}")]
    ProbeRadius(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("no feasible point found")]
    Infeasible,
}

pub type Result<T> = std::result::Result<T, FridgeError>;
