//! Loading activity exports, repository metadata and dependency snapshots.

mod corpus;
mod deps;
mod events;
mod fetch;
mod metadata;

use std::path::PathBuf;

pub use corpus::{Corpus, RepoData};
pub use deps::{parse_dependency_snapshot, read_dependency_snapshot, DependencySnapshot};
pub use events::{
    normalize_record, parse_day, parse_event_log, read_event_log, write_event_log, ActivityEvent, DateError,
    EventKind, EventRecord, Role,
};
pub use fetch::{fetch_repository_export, FetchConfig, FetchError, RepositoryExport};
pub use metadata::{read_repo_metadata, write_repo_metadata, RepoMetadata};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record on line {0}")]
    MalformedRecord(usize),
    #[error("invalid date on line {0}")]
    InvalidDate(usize),
    #[error("duplicate repository {0}")]
    DuplicateRepo(String),
    #[error("repository {0} is archived before it was created")]
    InconsistentDates(String),
    #[error("event references repository {0} without metadata")]
    UnknownRepo(String),
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}
