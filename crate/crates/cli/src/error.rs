use thiserror::Error;

/// Process exit code of a successful run whose checks all passed.
pub const EXIT_OK: i32 = 0;
/// A declared check failed, or a numerical run aborted.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// The config was unreadable or invalid.
pub const EXIT_CONFIG: i32 = 2;
/// A simulation hit its event budget.
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Core(#[from] neuromf::Error),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        use neuromf::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Core(E::BudgetExceeded { .. }) => EXIT_BUDGET,
            CliError::Core(
                E::InvalidRate(_) | E::InvalidInitialLaw(_) | E::InvalidConfig(_) | E::InvalidArgument(_),
            ) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_CHECK_FAILED,
        }
    }
}
