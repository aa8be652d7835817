use thiserror::Error;

/// Error type shared across the crate.
///
/// The variants map onto the process exit codes used by the CLI:
/// configuration problems exit with 2, input/snapshot/io problems with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (bad dimensions, out-of-range parameters,
    /// unreadable or malformed config file).
    #[error("config: {0}")]
    Config(String),

    /// Invalid input record (dimension mismatch, non-finite values,
    /// unparseable line).
    #[error("input: {0}")]
    Input(String),

    /// Snapshot could not be written or restored.
    #[error("snapshot: {0}")]
    Snapshot(String),

    /// Underlying I/O failure on an input or output stream.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn snapshot(msg: impl Into<String>) -> Self {
        Error::Snapshot(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
