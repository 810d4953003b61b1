use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("node `{0}` appears in the edge list but has no attribute")]
    MissingAttribute(String),
    #[error("node `{0}` has more than one attribute value")]
    DuplicateAttribute(String),
    #[error("attribute of node `{0}` is not finite")]
    NonFiniteAttribute(String),
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("diagram contains a point with infinite death; resolve infinite points first")]
    InfiniteDeath,
    #[error("replacement value {value} is below the birth {birth} of an essential point")]
    ReplacementBelowBirth { value: f64, birth: f64 },
    #[error("diagrams mix homological dimensions; restrict to a single dimension first")]
    MixedDimensions,
    #[error("grid must contain at least two strictly increasing finite points")]
    InvalidGrid,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("series of length {len} is too short (need at least {need})")]
    SeriesTooShort { len: usize, need: usize },
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
