//! Batch front end for ticksim: reads a JSON run configuration, runs one
//! command and writes CSV/JSON results plus a manifest.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

pub use commands::{run, Command, Options};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const ACCURACY: u8 = 3;
    pub const RESOURCE: u8 = 4;
    pub const INTERNAL: u8 = 5;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(exit::USAGE, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ticksim::Error> for CliError {
    fn from(e: ticksim::Error) -> Self {
        use ticksim::Error as E;
        let code = match &e {
            E::Accuracy { .. } | E::Horizon { .. } | E::Degenerate(_) | E::InsufficientData { .. } => exit::ACCURACY,
            E::Resource { .. } | E::Size { .. } => exit::RESOURCE,
            E::Invariant(_) | E::Numeric(_) => exit::INTERNAL,
            _ => exit::USAGE,
        };
        Self::new(code, e.to_string())
    }
}
