use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or parameters.
    #[error("config error: {0}")]
    Config(String),
    /// A validation check failed.
    #[error("validation failed: {0}")]
    Validation(String),
    /// Overflow or another numeric failure at run time.
    #[error("runtime error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        })
    }
}

impl From<gcf_core::Error> for CliError {
    fn from(e: gcf_core::Error) -> Self {
        use gcf_core::Error as E;
        match e {
            E::Parameter(_) | E::OverlappingBands { .. } => CliError::Config(e.to_string()),
            E::Overflow { .. } | E::Internal(_) | E::Io(_) | E::Json(_) | E::Csv(_) => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}
