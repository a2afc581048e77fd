use thiserror::Error;

/// Errors raised anywhere in the synthesis flow.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("field capacity exceeded: {p}^{k} is larger than the supported 2^20 elements")]
    Capacity { p: u32, k: u32 },

    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("polynomial {poly} is not primitive over GF({p}): {reason}")]
    NotPrimitive { poly: String, p: u32, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fold factor {q} does not divide order {order}; divisors are {divisors:?}{hint}")]
    FoldFactor {
        q: usize,
        order: usize,
        divisors: Vec<usize>,
        hint: String,
    },

    #[error("graph is not circulant under the given labeling: row {row} {detail}")]
    NotCirculant { row: usize, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error in {what}: {detail}")]
    Format { what: String, detail: String },

    #[error("structural inconsistency at {locus}: {detail}")]
    Structural { locus: String, detail: String },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {detail}")]
    Io { path: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(what: impl Into<String>, detail: impl ToString) -> Self {
        Error::Format {
            what: what.into(),
            detail: detail.to_string(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            detail: err.to_string(),
        }
    }
}
