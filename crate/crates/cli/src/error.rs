use std::path::PathBuf;

/// Failures surfaced by the command-line front end, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },
    #[error("{path}:{line}: {message}")]
    Data { path: String, line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("data: {0}")]
    DataError(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 usage/config, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Invalid(_) => 1,
            CliError::Data { .. } | CliError::DataError(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<tsme_core::Error> for CliError {
    fn from(e: tsme_core::Error) -> Self {
        use tsme_core::Error as E;
        match e {
            E::SvdFailed { .. } => CliError::Numerical(e.to_string()),
            E::SegmentLength { .. } | E::Shift { .. } | E::InvalidSpec(_) | E::InvalidParameter(_) => {
                CliError::Invalid(e.to_string())
            }
            _ => CliError::DataError(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
