use std::path::PathBuf;

use thiserror::Error;

/// Exit codes shared by every subcommand.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const INFEASIBLE: i32 = 1;
    pub const UNDECIDED: i32 = 2;
    pub const USAGE: i32 = 64;
    pub const INPUT_FORMAT: i32 = 65;
    pub const NUMERICAL: i32 = 70;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Lib(#[from] aglerlab::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use aglerlab::Error as E;
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Read { .. } | CliError::Parse { .. } => exit::INPUT_FORMAT,
            CliError::Write { .. } => exit::NUMERICAL,
            CliError::Lib(e) => match e {
                E::InvalidArgument(_) | E::DegreeOverflow { .. } | E::DimensionMismatch { .. } => {
                    exit::INPUT_FORMAT
                }
                E::Format(_) => exit::INPUT_FORMAT,
                E::ResourceCap { .. } => exit::UNDECIDED,
                E::NoConvergence { .. }
                | E::NotPsd { .. }
                | E::WellDefinedness { .. }
                | E::GramMismatch { .. }
                | E::TaylorMismatch { .. }
                | E::SingularState { .. } => exit::NUMERICAL,
            },
        }
    }
}
