use thiserror::Error;

use crate::geometry::ListReport;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A size or sample cap was hit before the computation could finish.
    #[error("budget exceeded: {what} (limit {limit})")]
    Budget { what: String, limit: u64 },

    /// The exact list-size search ran out of nodes. The best witness found
    /// so far is a valid lower bound on the true worst-case list size.
    #[error("list-size search exhausted {nodes} nodes; best lower bound {}", best.list_size)]
    SearchBudget { nodes: u64, best: Box<ListReport> },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn budget(what: impl Into<String>, limit: u64) -> Self {
        Error::Budget {
            what: what.into(),
            limit,
        }
    }

    /// True for errors caused by a configured cap rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. } | Error::SearchBudget { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
