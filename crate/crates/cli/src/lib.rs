//! Library behind the `gccl` binary: configuration, the end-to-end
//! pipeline, and the scaling benchmark. Exposed as a crate so integration
//! tests drive the same code paths as the CLI.

pub mod bench;
pub mod config;
pub mod pipeline;

use std::fmt;

/// CLI-level error: configuration problems plus everything bubbling up
/// from the core crate.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(gccl_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gccl_core::Error> for CliError {
    fn from(err: gccl_core::Error) -> Self {
        CliError::Core(err)
    }
}

impl CliError {
    /// Process exit code: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> u8 {
        use gccl_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(err) => match err {
                E::Argument(_) => 2,
                E::Input(_) | E::Parse(_) | E::Io(_) | E::DegenerateProbe(_) => 3,
                E::Numerical(_) | E::DegeneratePositiveSet(_) | E::UndefinedScore(_) => 4,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
