use thiserror::Error;

/// Exit status when every check passed or the condition holds.
pub const EXIT_OK: i32 = 0;
/// analyze: the stability condition is violated somewhere on the interval.
pub const EXIT_VIOLATED: i32 = 10;
/// Computation or I/O failure.
pub const EXIT_RUNTIME: i32 = 11;
/// Bad flags, expressions or configuration.
pub const EXIT_USAGE: i32 = 12;
/// certify: Φ(r) is not strictly negative, so no certificate is issued.
pub const EXIT_REFUSED: i32 = 20;
/// verify / selfcheck: at least one check failed.
pub const EXIT_CHECKS_FAILED: i32 = 30;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] warpiso_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use warpiso_core::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(
                E::Parse(_)
                | E::Diff(_)
                | E::Invalid(_)
                | E::OutOfInterval { .. }
                | E::EpsilonTooLarge { .. }
                | E::NotPositive { .. },
            ) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        }
    }
}
