use thiserror::Error;
use vldp::harness::HarnessError;
use vldp::primitives::WireError;
use vldp::protocol::{ProtocolError, Rejection};

use crate::config::ConfigError;
use crate::dataset::DataError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("server rejected the message: {}", .0.code())]
    Rejected(Rejection),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{failed} of {total} attacks were not rejected as expected")]
    AttacksFailed { failed: usize, total: usize },
    #[error("malformed {what}: {source}")]
    Wire {
        what: &'static str,
        #[source]
        source: WireError,
    },
    #[error("state file line {line}: {reason}")]
    State { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Data(DataError::Io(_)) => 3,
            CliError::Data(_) | CliError::Csv(_) => 4,
            CliError::Protocol(ProtocolError::Rejected(_)) | CliError::Rejected(_) => 6,
            CliError::Protocol(_) => 5,
            CliError::Harness(_) | CliError::AttacksFailed { .. } => 7,
            CliError::Wire { .. } | CliError::State { .. } => 8,
        }
    }

    pub fn wire(what: &'static str) -> impl FnOnce(WireError) -> CliError {
        move |source| CliError::Wire { what, source }
    }
}
