use std::process::ExitCode;

use superchan::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Solver(_) => 4,
        })
    }

    /// Failure while reading or validating an input file.
    pub fn data(context: impl std::fmt::Display) -> impl FnOnce(Error) -> Self {
        move |e| CliError::Data(format!("{context}: {e}"))
    }

    /// Failure inside a numerical routine.
    pub fn compute(context: impl std::fmt::Display) -> impl FnOnce(Error) -> Self {
        move |e| match e {
            Error::SolverNotConverged { .. } => CliError::Solver(format!("{context}: {e}")),
            Error::InvalidArgument(_) | Error::UnknownName { .. } => CliError::Config(format!("{context}: {e}")),
            _ => CliError::Data(format!("{context}: {e}")),
        }
    }

    pub fn output(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Config(format!("cannot write {}: {e}", path.display()))
    }
}
