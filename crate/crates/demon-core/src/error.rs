use core::fmt;

/// Error type shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A square matrix was required.
    NotSquare { rows: usize, cols: usize },
    /// Operand dimensions do not match.
    DimensionMismatch {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },
    /// Vectorized-state length is not a perfect square.
    NotPerfectSquare { dim: usize },
    /// A Hermitian matrix was required; the maximum deviation |M − M†| is reported.
    NotHermitian { max_dev: f64 },
    /// An iterative scheme exceeded its iteration budget.
    ConvergenceFailed { what: &'static str },
    /// A probability argument fell outside [0, 1].
    ProbabilityOutOfRange { value: f64 },
    /// Eigenstate index outside {1, 2, 3}.
    InvalidTarget { target: usize },
    /// The map's fixed point is not unique: |λ₂| reported.
    NonUniqueFixedPoint { lambda2_mod: f64 },
    /// A density matrix violated Hermiticity / trace / positivity beyond tolerance.
    StateInvariantViolated { what: &'static str, value: f64 },
    /// An operation restricted to one Hamiltonian kind was called with the other.
    WrongHamiltonianKind { expected: &'static str },
    /// Trajectory enumeration 4^n would exceed the configured cap.
    BudgetExceeded { n: u32, cap: u32 },
    /// A probability sits on the boundary of the simplex (log singularity).
    BoundaryProbability { index: usize },
    /// Inputs are mutually inconsistent (diagnostic attached).
    InconsistentInputs { what: &'static str },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotSquare { rows, cols } => {
                write!(f, "matrix must be square, got {rows}x{cols}")
            }
            Error::DimensionMismatch {
                a_rows,
                a_cols,
                b_rows,
                b_cols,
            } => write!(
                f,
                "dimension mismatch: {a_rows}x{a_cols} vs {b_rows}x{b_cols}"
            ),
            Error::NotPerfectSquare { dim } => {
                write!(f, "vectorized length {dim} is not a perfect square")
            }
            Error::NotHermitian { max_dev } => {
                write!(f, "matrix is not Hermitian (max |M - M†| = {max_dev:e})")
            }
            Error::ConvergenceFailed { what } => write!(f, "{what}: iteration budget exceeded"),
            Error::ProbabilityOutOfRange { value } => {
                write!(f, "probability {value} outside [0, 1]")
            }
            Error::InvalidTarget { target } => {
                write!(f, "eigenstate index {target} outside 1..=3")
            }
            Error::NonUniqueFixedPoint { lambda2_mod } => write!(
                f,
                "fixed point is not unique: subdominant eigenvalue modulus {lambda2_mod}"
            ),
            Error::StateInvariantViolated { what, value } => {
                write!(f, "state invariant violated: {what} = {value:e}")
            }
            Error::WrongHamiltonianKind { expected } => {
                write!(f, "operation requires the {expected} Hamiltonian kind")
            }
            Error::BudgetExceeded { n, cap } => write!(
                f,
                "4^{n} trajectories exceed the cap n <= {cap}; raise the cap or enable pruning"
            ),
            Error::BoundaryProbability { index } => {
                write!(f, "probability {index} is on the simplex boundary (log singularity)")
            }
            Error::InconsistentInputs { what } => write!(f, "inconsistent inputs: {what}"),
        }
    }
}

#[cfg(any(feature = "std", test))]
impl std::error::Error for Error {}
