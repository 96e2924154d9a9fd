use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("inconsistent factor shape: factors multiply to {product}, operator dimension is {dim}")]
    ShapeMismatch { product: usize, dim: usize },

    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystems(String),

    #[error("matrix is not Hermitian (max |h - h^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue = {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange { name: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("wire {0} appears more than once")]
    WireCollision(usize),

    #[error("wire {wire} is out of range for a {n_qubits}-qubit state")]
    WireOutOfRange { wire: usize, n_qubits: usize },

    #[error("gate acts on {arity} qubits but {wires} wires were given")]
    ArityMismatch { arity: usize, wires: usize },

    #[error("reservoir has {available} qubits but {required} are required")]
    ReservoirTooSmall { required: usize, available: usize },

    #[error("collision plan does not match the run: {0}")]
    PlanMismatch(String),

    #[error("map is not trace preserving (deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("ensemble size {ensemble} is smaller than the state rank {rank}")]
    EnsembleTooSmall { ensemble: usize, rank: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
