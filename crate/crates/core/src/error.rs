use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain [{a}, {b}]: need finite a < b")]
    InvalidDomain { a: f64, b: f64 },
    #[error("coefficient vector must not be empty")]
    EmptyCoefficients,
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("grid must not be empty")]
    EmptyGrid,
    #[error("grid points must be strictly increasing")]
    UnsortedGrid,
    #[error("degree {degree} expansion needs more than {nodes} nodes")]
    InsufficientNodes { degree: usize, nodes: usize },
    #[error("invalid denominator bounds: need 0 < lower ({lower}) <= upper ({upper})")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("denominator vanishes on the grid")]
    DegenerateDenominator,
    #[error("invalid fit problem: {0}")]
    InvalidProblem(String),
    #[error("malformed linear program: {0}")]
    MalformedLp(String),
    #[error("simplex iteration cap of {limit} exceeded (numerical cycling)")]
    IterationLimit { limit: usize },
    #[error("LP failure at level z = {z}: {source}")]
    Level {
        z: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("constraints unsatisfiable: level {last_level} still infeasible after doubling")]
    Unsatisfiable { last_level: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular to working precision (pivot {pivot:e}, norm {norm:e}); spectrum outside certified region?")]
    Singular { pivot: f64, norm: f64 },
    #[error("relative error undefined: reference is zero but the other matrix is not")]
    UndefinedRelativeError,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
