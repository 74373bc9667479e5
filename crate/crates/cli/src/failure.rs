use std::fmt;

use pbench_core::Error;

/// A command failure and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_DEPENDENCY: u8 = 4;

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn dependency(message: impl Into<String>) -> Self {
        Failure { code: EXIT_DEPENDENCY, message: message.into() }
    }

    /// Errors raised while reading an upstream artifact: anything other than
    /// plain I/O means the artifact is missing, corrupt or from another schema.
    pub fn artifact(what: &str, e: Error) -> Self {
        match e {
            Error::IoFailure(io) if io.kind() != std::io::ErrorKind::NotFound => {
                Failure { code: EXIT_IO, message: format!("{what}: {io}") }
            }
            other => Failure::dependency(format!("{what}: {other}")),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::ConfigInvalid(_) | Error::ParseProfile(_) | Error::TargetTooSmall { .. } => EXIT_CONFIG,
            Error::IoFailure(_) => EXIT_IO,
            Error::SchemaMismatch { .. } | Error::Format(_) | Error::DimensionMismatch { .. } => EXIT_DEPENDENCY,
            _ => EXIT_OTHER,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_IO, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, Failure>;
