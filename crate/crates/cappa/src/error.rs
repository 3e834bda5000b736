use thiserror::Error;

/// Errors produced by instance generation, persistence, and the numerical routines.
#[derive(Debug, Error)]
pub enum CappaError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error in {record}: {reason}")]
    Parse { record: String, reason: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("enumeration guard exceeded: {supports} supports at order {order} (limit {limit}); use the sampled surrogate instead")]
    Capacity {
        supports: u128,
        order: usize,
        limit: u128,
    },

    #[error("divergence at step {step} (t = {time}): non-finite state encountered")]
    Divergence {
        step: u64,
        time: f64,
        /// Last state with all entries finite.
        last_finite: Vec<f64>,
    },

    #[error("constants are not certified: {0}")]
    NotCertified(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CappaError>;
