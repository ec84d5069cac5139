use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitCountMismatch { left: usize, right: usize },

    #[error("qubit index {index} out of range for {qubit_count} qubits")]
    QubitOutOfRange { index: usize, qubit_count: usize },

    #[error("dimension cap exceeded: {qubits} qubits > cap {cap}")]
    DimensionCap { qubits: usize, cap: usize },

    #[error("matrix must be square with dimension 2^L, got {rows}x{cols} for L={qubits}")]
    BadMatrixShape {
        rows: usize,
        cols: usize,
        qubits: usize,
    },

    #[error("noise probability {0} outside [0, 1]")]
    BadNoiseProbability(f64),

    #[error("per-gate noise requires the density-matrix backend")]
    NoiseOnStateVector,

    #[error("branch circuit touches the ancilla qubit")]
    BranchTouchesAncilla,

    #[error("gate has no controlled form usable in a Hadamard-test branch: {0}")]
    UncontrollableGate(String),

    #[error("calibration matrix is singular")]
    SingularCalibration,

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("{0}")]
    InvalidInput(String),

    #[error("time {t} fs outside trajectory range [{first}, {last}] fs")]
    TimeOutOfRange { t: f64, first: f64, last: f64 },

    #[error("series too short: needs coverage of [0, {needed}] fs, has {available} fs")]
    SeriesTooShort { needed: f64, available: f64 },

    #[error("non-Hermitian Hamiltonian (max imaginary coefficient {0:.3e})")]
    NonHermitian(f64),

    #[error("eigensolver failed to converge after {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("window {index} failed: {source}")]
    Window {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
