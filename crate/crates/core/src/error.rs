use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,
    #[error("matrix entry is not finite")]
    NonFinite,
    #[error("matrix is singular (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("matrix is not Hermitian (||A - A*|| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("Jacobi eigensolver did not converge within {rotations} rotations")]
    NoConvergence { rotations: usize },
    #[error("matrix is not positive semidefinite (lambda_min = {lambda_min:e})")]
    NotPsd { lambda_min: f64 },
    #[error("polynomial of degree {degree} cannot be reversed at formal degree {formal}")]
    DegreeExceedsFormal { degree: usize, formal: usize },
    #[error("quadrature under-resolved for moment {order}: doubling changed it by {change:e}")]
    QuadratureUnderResolved { order: i64, change: f64 },
    #[error("moment table of order {available} is too short, need {required}")]
    InsufficientMoments { required: usize, available: usize },
    #[error("empty integration grid")]
    EmptyGrid,
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("degenerate measure: Gram section of degree {degree} is numerically singular")]
    DegenerateMeasure { degree: usize },
    #[error("polynomials are not from one measure (compatibility residual {residual:e})")]
    IncompatiblePair { residual: f64 },
    #[error(
        "reflection coefficient H_{index} has norm {norm} >= 1 - 1e-8 \
         (degenerate measure or invalid coefficient)"
    )]
    ReflectionTooLarge { index: usize, norm: f64 },
    #[error("invalid reflection sequence: H_{index} has norm {norm} >= 1 - 1e-8")]
    InvalidReflection { index: usize, norm: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Input or validation failures, as opposed to breakdowns of a computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimMismatch { .. }
                | Error::EmptyMatrix
                | Error::NonFinite
                | Error::InvalidWeight(_)
                | Error::InvalidMeasure(_)
                | Error::InvalidReflection { .. }
                | Error::InvalidArgument(_)
                | Error::DegreeExceedsFormal { .. }
        )
    }
}
