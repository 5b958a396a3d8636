use thiserror::Error;

/// Errors raised by lattice enumeration, black-box queries and mechanisms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A lattice or the query ledger would grow past the configured maximum.
    #[error("budget exceeded: {needed} subsets requested, limit is {limit}")]
    BudgetExceeded { needed: u128, limit: u64 },

    /// A mechanism queried outside its permitted down neighborhood.
    #[error("locality violation: {0}")]
    LocalityViolation(String),

    /// An external evaluator failed or answered with something other than a number.
    #[error("plugin failure: {0}")]
    Plugin(String),

    /// A parameter is outside the domain the operation accepts.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A mechanism-level precondition does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
