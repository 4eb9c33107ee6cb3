use std::fmt;

/// A command failure, classified by exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad input: files, formulas, flags.
    User(String),
    /// A strategy or proof object did not check.
    Verification(String),
    /// Two independent computations disagree.
    Oracle(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Oracle(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) => write!(f, "error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Oracle(m) => write!(f, "internal error, oracle disagreement: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
