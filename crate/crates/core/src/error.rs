use thiserror::Error;

/// Errors produced by the simulation, training and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("two-qubit gate needs distinct wires, got {0} twice")]
    RepeatedWire(usize),

    #[error("periodic Poisson problem is not solvable: mean charge density {0:e}")]
    Solvability(f64),

    #[error("particle {index} at x = {position} lies outside [0, {length})")]
    PositionOutOfDomain { index: usize, position: f64, length: f64 },

    #[error("non-finite loss at epoch {epoch}\n{dump}")]
    NonFiniteLoss { epoch: usize, dump: String },

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("scale calibration failed: {0}")]
    Calibration(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
