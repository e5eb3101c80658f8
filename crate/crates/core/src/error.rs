//! Error type shared by the whole pipeline.

use alloc::string::String;
use core::fmt;

/// Failure modes of the pipeline, mapped to CLI exit codes 2/3/4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Invalid input: precondition violated, malformed data, incompatible fields.
    Domain(String),
    /// A configured cap (enumeration size, memory, degree) was exceeded.
    Resource(String),
    /// A randomized search ran out of trial budget without finding a witness.
    SearchFailure(String),
    /// An exhaustive search completed without a match (e.g. no curve of the
    /// requested group order exists).
    NotFound(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
    pub fn search(msg: impl Into<String>) -> Self {
        Error::SearchFailure(msg.into())
    }
    pub fn not_found(msg: impl Into<String>) -> Self {
        Error::NotFound(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Resource(m) => write!(f, "resource limit: {m}"),
            Error::SearchFailure(m) => write!(f, "search failure: {m}"),
            Error::NotFound(m) => write!(f, "not found: {m}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
