use std::fmt;
use std::path::{Path, PathBuf};

use dfop_core::Error as CoreError;

/// Failure class; doubles as the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage = 1,
    Data = 2,
    Numeric = 3,
    Verify = 4,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        self as i32
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Data => "data",
            ErrorKind::Numeric => "numeric",
            ErrorKind::Verify => "verify",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Verify(String),
}

impl AppError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            AppError::Usage(_) => ErrorKind::Usage,
            AppError::Io { .. } | AppError::Parse { .. } | AppError::Data(_) => ErrorKind::Data,
            AppError::Verify(_) => ErrorKind::Verify,
            AppError::Core(e) => match e {
                CoreError::InvalidParameter { .. } => ErrorKind::Usage,
                CoreError::NonFinite
                | CoreError::NumericFailure { .. }
                | CoreError::SingularMatrix { .. } => ErrorKind::Numeric,
                _ => ErrorKind::Data,
            },
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        AppError::Usage(msg.into())
    }

    /// `dfop: error: <kind>: <message>` on one line.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("dfop: error: {}: {}", self.kind().name(), msg)
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
