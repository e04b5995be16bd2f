use thiserror::Error;

/// Errors raised by the rate engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid ball set: {0}")]
    InvalidSet(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("security constraint on decoy intensities violated (residual {residual:.3e})")]
    SecurityConstraint { residual: f64 },

    #[error("no untagged signal: {0}")]
    NoUntaggedSignal(String),

    #[error("statistic `{quantity}` already converted towards its {direction} bound")]
    DoubleConversion { quantity: String, direction: String },

    #[error("statistic `{0}` has no pending conversion in the plan")]
    UnplannedConversion(String),

    #[error("ledger entry `{0}` is not assigned to a failure chain")]
    UnpartitionedLedger(String),

    #[error("pair-count parity violated: {0}")]
    Parity(String),

    #[error("numerical underflow: {0}")]
    Underflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
