//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum McaError {
    /// A model evaluation was fed non-finite or otherwise invalid data.
    #[error("model evaluation error: {0}")]
    Model(String),

    /// Invalid configuration (non-positive step size, weights, limits...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A problem handed to the MPC layer is malformed.
    #[error("invalid MPC problem: {0}")]
    Problem(String),

    /// The QP/SQP machinery failed in a way that has no automatic recovery.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Scenario ingestion failed (malformed CSV, non-monotone time base...).
    #[error("scenario error: {0}")]
    Scenario(String),

    /// Evaluation over an empty or inconsistent trajectory log.
    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
