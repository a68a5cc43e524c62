use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QcError {
    /// An input violated a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The request is valid but exceeds what this implementation supports.
    #[error("unsupported: {0}")]
    Capability(String),
    /// A lattice enumeration would visit more points than the configured budget.
    #[error("visit budget exceeded: predicted {predicted} > budget {budget} (largest feasible L ~ {max_l:.3})")]
    Budget {
        predicted: f64,
        budget: f64,
        max_l: f64,
    },
    /// A numerical procedure did not reach its target accuracy.
    #[error("accuracy not reached: {0}")]
    Accuracy(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, QcError>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(QcError::Argument(msg.into()))
}
