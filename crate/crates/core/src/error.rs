use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("invalid free factor system: {0}")]
    InvalidFactorSystem(String),
    #[error("ambient rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("path is not composable at position {position}")]
    NotComposable { position: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("explicit path exceeded the length cap {0}")]
    Overflow(usize),
    #[error("matrix is reducible")]
    Reducible,
    #[error("matrix is not primitive: {0}")]
    NotPrimitive(String),
    #[error("peripheral element: {0}")]
    Peripheral(String),
    #[error("proper power of `{root}`")]
    ProperPower { root: String },
    #[error("collapse mismatch: {0}")]
    CollapseMismatch(String),
    #[error("direction {direction} is not periodic under the direction map (orbit: {orbit})")]
    NotPeriodic { direction: String, orbit: String },
    #[error("depth {requested} exceeds available depth {available}")]
    DepthExceeded { requested: usize, available: usize },
    #[error("zero norm")]
    ZeroNorm,
    #[error("automorphism does not preserve the peripheral factor {0}")]
    NotRelative(String),
    #[error("not comparable: {0}")]
    NotComparable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
