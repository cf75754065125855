use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Malformed { file: PathBuf, line: u64, message: String },

    #[error("{file}:{line}: duplicate {kind} id `{id}`")]
    DuplicateId {
        file: PathBuf,
        line: u64,
        kind: &'static str,
        id: String,
    },

    #[error("reference `{0}` has no resolvable journal")]
    UnresolvedJournal(String),

    #[error("citation to reference year {0} has no permutation group in the pool")]
    MissingGroup(i32),

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{0}")]
    Empty(&'static str),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(file: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Malformed {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}
