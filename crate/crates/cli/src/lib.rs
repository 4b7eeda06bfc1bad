//! Command-line front end: file formats, reports and the subcommands.

pub mod commands;
pub mod files;
pub mod report;

pub use commands::{run, Cli};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const UNSTABLE: i32 = 3;
    pub const INFEASIBLE: i32 = 4;
    pub const SOLVER: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] posgain::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use posgain::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Invalid(_) => exit::PARSE,
            CliError::Io(_) => exit::IO,
            CliError::Model(e) => match e {
                E::UnstableSystem(_) => exit::UNSTABLE,
                E::Solver { .. } => exit::SOLVER,
                _ => exit::PARSE,
            },
        }
    }
}
