use std::io;

/// Errors surfaced by the command-line layer.
///
/// The split matters for exit codes: anything the user typed wrong
/// ([`CliError::Usage`]) exits with status 2, every other failure with 1, and
/// a clean run with 0 — unless a run aborted, which also maps to 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad command line or config contents: malformed policy string,
    /// unknown key, missing required field.
    #[error("{0}")]
    Usage(String),
    /// Structurally valid input that cannot be acted on, e.g. aggregating
    /// result files from different task kinds.
    #[error("{0}")]
    Input(String),
    /// Failure bubbled up from the experiment engine.
    #[error(transparent)]
    Core(#[from] sedkit_core::Error),
    /// Filesystem trouble, annotated with the path or action involved.
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> CliError {
        CliError::Input(msg.into())
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> CliError {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit status this error should terminate with.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
