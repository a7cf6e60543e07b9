use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |H - H^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max |U^dagger U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("Hermitian eigendecomposition did not converge")]
    EigendecompositionFailure,

    #[error("singular value decomposition did not converge")]
    ConvergenceFailure,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("{len} entries do not form a square matrix")]
    NotSquare { len: usize },

    #[error("Pauli word `{word}` has length {found}, expected {expected}")]
    BadWordLength { word: String, expected: usize, found: usize },

    #[error("invalid Pauli letter `{letter}` in `{word}`")]
    BadPauliLetter { word: String, letter: char },

    #[error("Pauli coefficient `{0}` is not a finite real number")]
    NonRealCoefficient(String),

    #[error("malformed Pauli term `{0}` (expected `<coeff> * <WORD>`)")]
    MalformedTerm(String),

    #[error("Trotterization needs a Pauli-term Hamiltonian, got an explicit matrix")]
    ExplicitMatrixUnsupported,

    #[error("qubit index {index} out of range for {qubits} qubit(s)")]
    QubitOutOfRange { index: usize, qubits: usize },

    #[error("gate {gate} needs distinct qubits, got {a} and {b}")]
    RepeatedQubit { gate: &'static str, a: usize, b: usize },

    #[error("group closure exceeded {max_order} elements")]
    ClosureExceeded { max_order: usize },

    #[error("acceptance probability has imaginary residue {residue:.3e}")]
    NonRealProbability { residue: f64 },

    #[error("probability {0} lies outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange(f64),

    #[error("state vector has norm {norm}, expected 1")]
    UnnormalizedState { norm: f64 },

    #[error("ansatz expects {expected} parameters, got {found}")]
    BadParameterCount { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInstance(String),
}
