//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A set of actions violated the one-action-per-robot feasibility rule.
    #[error("infeasible action set: {0}")]
    Infeasible(String),

    /// A scenario or config file failed validation; names the offending field.
    #[error("parse error in field `{field}`: {reason}")]
    Parse { field: String, reason: String },

    /// File declared a schema version this build does not understand.
    #[error("unsupported schema version {found} (this build reads version {expected})")]
    SchemaVersion { found: u64, expected: u64 },

    /// An exact enumeration would exceed its configured cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Robot id not present in the graph or scenario.
    #[error("unknown robot id {0}")]
    UnknownRobot(usize),

    /// Action id outside the objective's action table.
    #[error("unknown action id {0}")]
    UnknownAction(usize),

    /// Numerical state violated an invariant (e.g. a non-PSD covariance).
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
