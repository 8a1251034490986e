use thiserror::Error;

/// Errors raised by the coupling, reduction and spectral routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate parametrization: {0}")]
    DegenerateParametrization(String),

    #[error("separating coupling (4 - detA - 4i Im gamma = 0)")]
    SeparatingCoupling,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),

    #[error("t = {0} lies on a vertex")]
    OnVertex(f64),

    #[error(
        "vanishing reduction denominator outside the special branches at generation {generation}"
    )]
    UnhandledDegenerate { generation: usize },

    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("evaluation point t = {0} coincides with an interaction point")]
    NonMaximalDomain(f64),

    #[error("T(z) + B is numerically singular (condition number {0:e})")]
    SingularTB(f64),

    #[error("detA = 0 at point {0}; the resolvent series needs detA != 0")]
    ZeroDetA(usize),

    #[error("measure sets use different regimes ({0} vs {1} weights)")]
    RegimeMismatch(usize, usize),

    #[error("need at least {needed} generations, spec has {found}")]
    InsufficientGenerations { needed: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
