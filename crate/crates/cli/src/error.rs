use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] pqlap::Error),

    #[error("{0} verification criteria failed")]
    Verification(usize),

    #[error("{0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use pqlap::Error as E;
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Core(e) => match e {
                E::InvalidExponent(_)
                | E::EqualExponents(_)
                | E::InvalidLength(_)
                | E::InvalidMesh(_)
                | E::InvalidArgument(_)
                | E::WrongRegime(_)
                | E::InfeasibleNodalPattern { .. } => 2,
                _ => 3,
            },
        }
    }
}
