use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("modulus {0} is not allowed; every cyclic factor needs modulus >= 2")]
    InvalidModulus(u64),
    #[error("group has no cyclic factors")]
    EmptyGroup,
    #[error("group order overflows the supported range")]
    OrderOverflow,
    #[error("element has {got} coordinates, group has {expected} factors")]
    Arity { expected: usize, got: usize },
    #[error("coordinate {value} at position {position} is outside [0, {modulus})")]
    CoordinateOutOfRange {
        position: usize,
        value: u64,
        modulus: u64,
    },
    #[error("operands live in different groups")]
    SpecMismatch,
    #[error("element index {0} is out of range")]
    IndexOutOfRange(usize),
    #[error("requested {requested} elements but only {available} are available")]
    SizeOverflow { requested: usize, available: usize },
    #[error("{0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("limit exceeded: {0}")]
    LimitExceeded(String),
    #[error("internal check failed: {0}")]
    Internal(String),
    #[error("check `{name}` failed; audit trail: {trail}")]
    CheckFailed { name: String, trail: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
