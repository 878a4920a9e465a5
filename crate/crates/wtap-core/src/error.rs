use thiserror::Error;

/// Errors surfaced by instance construction, solvers and the rounding pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: not a spanning tree, unknown node, bad cost, bad parse.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation was called on state that violates its precondition.
    #[error("state error: {0}")]
    State(String),

    /// The instance (or a sub-problem) admits no feasible augmentation.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A configured limit (branch nodes, separation rounds, restarts) was hit.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// A structural property that the algorithm guarantees failed to verify.
    #[error("property check failed: {0}")]
    PropertyFailure(String),

    /// Invariant breach inside the solver itself; always a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
