use thiserror::Error;

/// Command failure, carrying the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    OutOfVocabulary(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) | CliError::Parse(_) => 2,
            CliError::OutOfVocabulary(_) => 3,
        }
    }
}

impl From<vecjoin::Error> for CliError {
    fn from(e: vecjoin::Error) -> Self {
        use vecjoin::Error as E;
        let msg = e.to_string();
        match e {
            E::OutOfVocabulary(_) => CliError::OutOfVocabulary(msg),
            E::Io(_) => CliError::Io(msg),
            E::Parse { .. } => CliError::Parse(msg),
            _ => CliError::Usage(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Parse(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
