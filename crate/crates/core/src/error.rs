use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid index {index} out of range for N = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("mode {mode} out of range for a {modes}-mode system")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("mode count mismatch: expected {expected}, found {found}")]
    ModeCountMismatch { expected: usize, found: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("measurement slice has zero norm")]
    ZeroNormSlice,

    #[error("unsupported code: {0}")]
    UnsupportedCode(String),

    #[error("ancilla set inconsistent with encoder: {0}")]
    InconsistentAncillas(String),

    #[error("syndrome does not match any single-mode displacement")]
    UnrecognizedSyndrome,

    #[error("syndrome is ambiguous between modes {0:?}")]
    AmbiguousSyndrome(Vec<usize>),

    #[error("unsupported nullifier: {0}")]
    UnsupportedNullifier(String),

    #[error("sign assignment has {found} bits, circuit has {expected} XOR gates")]
    AssignmentLength { expected: usize, found: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
