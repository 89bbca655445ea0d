use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("matrix dimensions must be positive, got {0}x{1}")]
    EmptyShape(usize, usize),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("index ({0}, {1}) out of bounds for a {2}x{3} matrix")]
    IndexOutOfBounds(usize, usize, usize, usize),

    #[error("duplicate sampled entry ({0}, {1})")]
    DuplicateIndex(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator not full row rank: Cholesky pivot {pivot} is {value:e} (relative to largest diagonal)")]
    NotFullRowRank { pivot: usize, value: f64 },

    #[error("operator has a trivial null space")]
    TrivialNullSpace,

    #[error("matrix is zero")]
    ZeroMatrix,

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("numeric failure at outer stage {outer}, inner step {inner}: {source}")]
    Solve {
        outer: usize,
        inner: usize,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numeric kernels, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SvdFailed | Error::NotFullRowRank { .. } | Error::Solve { .. }
        )
    }
}
