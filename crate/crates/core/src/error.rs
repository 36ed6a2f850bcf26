use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid symbol {0:?}; expected one of '0', 'a', 'b', 'c'")]
    InvalidSymbol(char),

    #[error("word {0:?} is not admissible")]
    NotAdmissible(String),

    #[error("word too short: need at least {needed} symbols, got {got}")]
    WordTooShort { needed: usize, got: usize },

    #[error("enumeration size cap exceeded: n = {n}, cap = {cap}")]
    SizeCap { n: usize, cap: usize },

    #[error("invalid Markov chain: {0}")]
    InvalidMarkov(String),

    #[error("invalid cocycle: {0}")]
    InvalidCocycle(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument {r} outside the domain (0, {r0}) of the modulus")]
    OutOfDomain { r: f64, r0: f64 },

    #[error("quasimode precondition failed: {0}")]
    Quasimode(String),

    #[error("need at least {needed} gap records, got {got}")]
    InsufficientRecords { needed: usize, got: usize },

    #[error("export failed: {0}")]
    Export(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Export(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Export(e.to_string())
    }
}
