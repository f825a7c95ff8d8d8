use std::fmt;
use std::process::ExitCode;

use serde_json::json;

use multirag_core::backend::BackendError;
use multirag_core::orchestrator::TurnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Backend,
    Internal,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::Usage => 2,
            Kind::Data => 3,
            Kind::Backend => 4,
            Kind::Internal => 5,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Kind::Usage => "usage",
            Kind::Data => "data",
            Kind::Backend => "backend",
            Kind::Internal => "internal",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Usage,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Data,
            message: message.into(),
        }
    }

    pub fn backend(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Backend,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Internal,
            message: message.into(),
        }
    }

    /// Prints the single-line JSON error to stderr and returns the exit code.
    pub fn report(&self) -> ExitCode {
        let line = json!({
            "error": self.kind.as_str(),
            "exit_code": self.kind.code(),
            "message": self.message,
        });
        eprintln!("{line}");
        ExitCode::from(self.kind.code())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.as_str(), self.message)
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        CliError::backend(e.to_string())
    }
}

impl From<TurnError> for CliError {
    fn from(e: TurnError) -> Self {
        if e.is_backend() || matches!(e, TurnError::AllCandidatesFailed(_)) {
            CliError::backend(e.to_string())
        } else {
            CliError::data(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
