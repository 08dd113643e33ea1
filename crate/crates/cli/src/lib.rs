//! Command implementations behind the `emfactor` binary.

pub mod cache;
pub mod commands;
pub mod config;
pub mod json;

use std::fmt;

/// Bumped whenever an output file changes shape; part of every cache key.
pub const FORMAT_VERSION: u32 = 1;

/// Failures that stop a command before it produces output. All map to exit 2.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(emfactor::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<emfactor::Error> for CliError {
    fn from(e: emfactor::Error) -> Self {
        CliError::Core(e)
    }
}
