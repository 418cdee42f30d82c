//! Error type carrying the process exit code contract: 0 success, 2 for
//! configuration problems, 3 for numerical failures, 1 for I/O trouble.

use std::io;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Prefixes the message while keeping the variant, so the exit code
    /// still reflects the original failure.
    pub fn with_context(self, context: String) -> Self {
        match self {
            CliError::Config(msg) => CliError::Config(format!("{context}: {msg}")),
            CliError::Numerical(msg) => CliError::Numerical(format!("{context}: {msg}")),
            CliError::Io(err) => {
                CliError::Io(io::Error::new(err.kind(), format!("{context}: {err}")))
            }
        }
    }
}

impl From<saddlekit::Error> for CliError {
    fn from(err: saddlekit::Error) -> Self {
        use saddlekit::Error as E;
        // Failures of the computation itself are numerical; everything else
        // traces back to what the user asked for.
        match &err {
            E::Divergence { .. }
            | E::SingularMassMatrix
            | E::CertificateRejected { .. }
            | E::Linalg(_) => CliError::Numerical(err.to_string()),
            _ => CliError::Config(err.to_string()),
        }
    }
}
