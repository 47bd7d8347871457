use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("matrix is not Hermitian (‖A − A†‖ = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (‖U†U − I‖ = {0:e})")]
    NotUnitary(f64),

    #[error("input vectors are not orthonormal (worst deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),

    #[error("phase is undefined for a vanishing Bloch vector")]
    UndefinedPhase,

    #[error("branch norm {norm} deviates from 1 at phi = {phi}")]
    NormViolation { phi: f64, norm: f64 },

    #[error("connection has imaginary residue {residue:e} at phi = {phi}")]
    ComplexConnection { phi: f64, residue: f64 },

    #[error("overlap {index} has magnitude {magnitude:e}; loop discretization is ill-conditioned")]
    IllConditioned { index: usize, magnitude: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
