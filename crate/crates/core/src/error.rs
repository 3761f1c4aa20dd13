use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("generator index {index} outside rank {rank}")]
    IndexOutOfRank { index: usize, rank: usize },
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("operation undefined on the identity")]
    Identity,
    #[error("resource limit exceeded: {what} needs {needed}, cap is {cap}")]
    ResourceLimit { what: String, needed: u64, cap: u64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid generating set: {0}")]
    InvalidGenSet(String),
    #[error("value outside evaluable range: {0}")]
    OutOfRange(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn limit(what: &str, needed: u64, cap: u64) -> Error {
    Error::ResourceLimit { what: what.to_string(), needed, cap }
}
