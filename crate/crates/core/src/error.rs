use thiserror::Error;

/// Errors produced by the rate, alignment, coding and inversion routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An exhaustive search would exceed its configured budget.
    #[error("resource limit exceeded in {what}: needs {needed}, budget {budget}{}", hint.as_deref().map(|h| format!(" ({h})")).unwrap_or_default())]
    ResourceLimit {
        what: &'static str,
        needed: f64,
        budget: f64,
        hint: Option<String>,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    /// The channel fails the unique factorization check; resample it.
    #[error("non-generic channel: {0}; resample the channel gains")]
    NonGeneric(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("code search failed after {attempts} attempts (p={p}, T={t}, d={d}, message_len={message_len})")]
    SearchFailure {
        attempts: usize,
        p: u64,
        t: usize,
        d: usize,
        message_len: usize,
    },

    #[error("inconsistent linear system at row {row}")]
    Inconsistent { row: usize },

    #[error("rank deficient system: rank {rank} < {columns} unknowns")]
    RankDeficient { rank: usize, columns: usize },

    /// No resolvable submessage was found; the peeling order has a bug.
    #[error("peeling stalled with {} unresolved submessages", remaining.len())]
    PeelStall { remaining: Vec<(usize, usize)> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
