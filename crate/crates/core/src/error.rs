use thiserror::Error;

/// Errors shared across the linear algebra, Lambert, certificate and
/// ellipsoid modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input contains NaN or infinite entries, or is otherwise malformed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative scheme hit its iteration cap before meeting its
    /// convergence threshold.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A Cholesky pivot was not positive: the matrix is not positive
    /// definite (beyond roundoff).
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    /// An eigenvalue was negative beyond the PSD tolerance.
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },

    /// Argument outside the domain of the function.
    #[error("argument {value:.17e} outside domain {domain}")]
    OutOfDomain { value: f64, domain: &'static str },

    /// A negative or non-finite optimality gap.
    #[error("invalid optimality gap {0:.17e}")]
    InvalidGap(f64),

    /// Matrix or vector dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The point set does not affinely span the space.
    #[error("degenerate point set: lifted rank {rank} < {required}")]
    DegeneratePoints { rank: usize, required: usize },

    /// Normalizing by the spectral norm of a zero matrix.
    #[error("zero matrix has no normalized error")]
    ZeroMatrix,

    /// Shape constraints on generated or loaded data were violated.
    #[error("invalid shape: {0}")]
    InvalidShape(String),
}

impl Error {
    /// Stable machine-readable name, used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::NoConvergence(_) => "NoConvergence",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NotPsd { .. } => "NotPSD",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::InvalidGap(_) => "InvalidGap",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::DegeneratePoints { .. } => "DegeneratePoints",
            Error::ZeroMatrix => "ZeroMatrix",
            Error::InvalidShape(_) => "InvalidShape",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
