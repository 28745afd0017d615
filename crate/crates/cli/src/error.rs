use std::fmt;

use mlconf_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
    Io,
}

/// A failure with the stage it happened in and the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub stage: Option<&'static str>,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Config, stage: None, message: msg.into() }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Data, stage: None, message: msg.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Io, stage: None, message: msg.into() }
    }

    pub fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    /// Classifies a library error raised while running `stage`. Input
    /// problems count as data errors while loading and as numeric failures
    /// once the analysis has started.
    pub fn from_core(stage: &'static str, e: Error) -> Self {
        let loading = matches!(stage, "ingest" | "load" | "score");
        let kind = match &e {
            Error::Numerical(_) => ErrorKind::Numeric,
            Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => ErrorKind::Data,
            Error::Io(_) => {
                if loading {
                    ErrorKind::Data
                } else {
                    ErrorKind::Io
                }
            }
            Error::Unknown { .. } if !loading => ErrorKind::Config,
            _ if loading => ErrorKind::Data,
            _ => ErrorKind::Numeric,
        };
        Self { kind, stage: Some(stage), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numeric => 4,
            ErrorKind::Io => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Config => "config error",
            ErrorKind::Data => "data error",
            ErrorKind::Numeric => "numeric failure",
            ErrorKind::Io => "i/o error",
        };
        match self.stage {
            Some(s) => write!(f, "{kind} in stage '{s}': {}", self.message),
            None => write!(f, "{kind}: {}", self.message),
        }
    }
}

impl std::error::Error for CliError {}

/// Attaches a stage name to library results.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for mlconf_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError::from_core(stage, e))
    }
}
