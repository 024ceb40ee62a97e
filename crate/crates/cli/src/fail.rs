use std::fmt;
use std::path::Path;

use hawkes_adoption::Error;

pub const CONFIG: u8 = 2;
pub const DATA: u8 = 3;

/// A command failure and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or unwritable paths.
    Config(String),
    /// Input files that parse badly or contradict each other.
    Data(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => CONFIG,
            Failure::Data(_) => DATA,
        }
    }

    pub fn config(e: impl fmt::Display) -> Self {
        Failure::Config(e.to_string())
    }

    /// Data problem found in `path`.
    pub fn data(path: &Path, e: impl fmt::Display) -> Self {
        Failure::Data(format!("{}: {e}", path.display()))
    }

    /// Classifies a library error raised while validating flags against data:
    /// I/O and argument-domain problems are configuration, the rest is data.
    pub fn from_lib(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Domain(_) => Failure::Config(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}
