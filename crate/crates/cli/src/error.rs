use std::fmt;

use capgraph::Error;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    /// Prefixes the message with the pipeline stage that failed.
    pub fn at(self, stage: &str) -> Self {
        CliError {
            code: self.code,
            message: format!("{stage}: {}", self.message),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_config() {
            EXIT_USAGE
        } else if e.is_numeric() {
            EXIT_NUMERIC
        } else {
            EXIT_DATA
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub trait Stage<T> {
    fn stage(self, label: &str) -> Result<T, CliError>;
}

impl<T> Stage<T> for capgraph::Result<T> {
    fn stage(self, label: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::from(e).at(label))
    }
}
