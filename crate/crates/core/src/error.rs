use std::path::PathBuf;

use thiserror::Error;

use crate::domain::{PlayerId, Position, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lineup: {}", format_violations(.0))]
    InvalidLineup(Vec<Violation>),

    #[error("infeasible: {reason}")]
    Infeasible { position: Option<Position>, reason: String },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unresolved reference: {0}")]
    Reference(String),

    #[error("no attribute snapshots for player {0}")]
    MissingData(PlayerId),

    #[error("zero-variance attribute `{0}`")]
    Degenerate(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("singular refit; culprit columns: {}", .columns.join(", "))]
    SingularRefit { columns: Vec<String> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no history: {0}")]
    History(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
