use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..={max}", max = crate::state::MAX_QUBITS)]
    Capacity(usize),

    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("Kraus set is not complete: max deviation {deviation:e} from identity")]
    IncompleteKraus { deviation: f64 },

    #[error("profile schema error at `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error("circuit validation failed: {0}")]
    Validation(String),

    #[error("duplicate record: {0}")]
    Conflict(String),

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("device `{0}` is not enrolled")]
    NotEnrolled(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
