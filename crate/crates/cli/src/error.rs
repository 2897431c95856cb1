use std::fmt;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

/// A failed command and the exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad arguments, configuration or input data.
    Usage(String),
    /// A model or tool backend failed for good.
    Backend(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// Input data problems share the usage exit code.
    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn backend(msg: impl Into<String>) -> Self {
        CliError::Backend(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Backend(_) => EXIT_BACKEND,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Backend(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}
