use std::process::ExitCode;

/// Process exit status for each failure class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    InvalidConfig = 1,
    CapExceeded = 2,
    StatisticalFailure = 3,
}

impl From<ExitKind> for ExitCode {
    fn from(k: ExitKind) -> Self {
        ExitCode::from(k as u8)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::InvalidConfig, message: message.into() }
    }

    /// Library errors: size caps map to [`ExitKind::CapExceeded`], everything else is a
    /// configuration problem.
    pub fn from_core(e: orthofield::Error, context: &str) -> Self {
        let kind = match e {
            orthofield::Error::CapExceeded { .. } | orthofield::Error::ExtentOverflow { .. } => ExitKind::CapExceeded,
            _ => ExitKind::InvalidConfig,
        };
        Self { kind, message: format!("{context}: {e}") }
    }
}
