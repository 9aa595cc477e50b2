use thiserror::Error;

/// Failures surfaced by the command-line front end, each tied to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("ingestion error: {0}")]
    Ingestion(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] dispersionlab::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use dispersionlab::Error as E;
        match self {
            CliError::Core(E::CapacityGuard(_)) => 3,
            CliError::Core(E::Numeric(_)) => 4,
            _ => 2,
        }
    }
}
