use thiserror::Error;

/// Errors produced by model construction, the solvers and the instance format.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pairwise term on edge ({i},{j}) is not submodular at ({lambda},{mu})")]
    NotSubmodular {
        i: usize,
        j: usize,
        lambda: usize,
        mu: usize,
    },

    #[error("instance too large: {configurations} labelings exceed the cap of {cap}")]
    Capacity { configurations: u128, cap: u128 },

    #[error("corrupted flow store on edge {edge}: {reason}")]
    CorruptedStore { edge: usize, reason: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("caller contract violated: {0}")]
    Contract(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
