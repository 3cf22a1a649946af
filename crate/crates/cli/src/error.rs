use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
    #[error("numerical error: {0}")]
    Numerical(#[from] impulse_fac_core::Error),
    #[error("{failed} verification check(s) failed")]
    Verification { failed: usize },
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub const OK: u8 = 0;
    pub const VERIFY_FAILED: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const NUMERICAL: u8 = 3;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::UnknownFixture(_) | CliError::Output { .. } => Self::CONFIG,
            CliError::Verification { .. } => Self::VERIFY_FAILED,
            CliError::Numerical(_) => Self::NUMERICAL,
        }
    }
}
