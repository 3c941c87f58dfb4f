use std::fmt;
use std::process::ExitCode;

/// Process exit statuses. These values are part of the interface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    /// Invalid configuration or malformed input data.
    Config = 2,
    /// A file could not be read or written.
    Io = 3,
    /// The sampler failed.
    Chain = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Config,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Io,
            message: message.into(),
        }
    }

    pub fn chain(message: impl Into<String>) -> Self {
        Self {
            kind: ExitKind::Chain,
            message: message.into(),
        }
    }

    /// Error raised while reading user data.
    pub fn from_data(context: &str, e: covshrink::Error) -> Self {
        use covshrink::Error as E;
        let message = format!("{context}: {e}");
        match &e {
            E::Io(_) => Self::io(message),
            E::Csv(c) if c.is_io_error() => Self::io(message),
            _ => Self::config(message),
        }
    }

    /// Error raised by the sampler or the study driver.
    pub fn from_run(e: covshrink::Error) -> Self {
        use covshrink::Error as E;
        match &e {
            E::InvalidParameter(_) | E::DimensionMismatch { .. } => Self::config(e.to_string()),
            E::Io(_) => Self::io(e.to_string()),
            _ => Self::chain(e.to_string()),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind as u8)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            ExitKind::Config => "configuration error",
            ExitKind::Io => "i/o error",
            ExitKind::Chain => "chain failure",
        };
        write!(f, "{label}: {}", self.message)
    }
}

impl std::error::Error for CliError {}
