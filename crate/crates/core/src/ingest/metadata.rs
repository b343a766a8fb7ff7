use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::events::{parse_day, DateError};
use super::{read_to_string, IngestError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoMetadata {
    pub repo_id: String,
    pub created_on: NaiveDate,
    pub archived_on: Option<NaiveDate>,
    pub url: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct MetadataRecord {
    repo: String,
    #[serde(default)]
    url: String,
    created: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    archived: Option<String>,
}

fn day(s: &str, line_no: usize) -> Result<NaiveDate, IngestError> {
    parse_day(s).map_err(|e| match e {
        DateError::Malformed => IngestError::MalformedRecord(line_no),
        DateError::Invalid => IngestError::InvalidDate(line_no),
    })
}

pub fn parse_repo_metadata(content: &str) -> Result<BTreeMap<String, RepoMetadata>, IngestError> {
    let mut out = BTreeMap::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MetadataRecord =
            serde_json::from_str(line).map_err(|_| IngestError::MalformedRecord(line_no))?;
        let created_on = day(&rec.created, line_no)?;
        let archived_on = match rec.archived.as_deref() {
            None | Some("") => None,
            Some(s) => Some(day(s, line_no)?),
        };
        if archived_on.is_some_and(|a| a < created_on) {
            return Err(IngestError::InconsistentDates(rec.repo));
        }
        if out.contains_key(&rec.repo) {
            return Err(IngestError::DuplicateRepo(rec.repo));
        }
        out.insert(
            rec.repo.clone(),
            RepoMetadata {
                repo_id: rec.repo,
                created_on,
                archived_on,
                url: rec.url,
            },
        );
    }
    Ok(out)
}

pub fn read_repo_metadata(
    path: impl AsRef<Path>,
) -> Result<BTreeMap<String, RepoMetadata>, IngestError> {
    parse_repo_metadata(&read_to_string(path.as_ref())?)
}

pub fn write_repo_metadata<'a, W: Write>(
    metas: impl IntoIterator<Item = &'a RepoMetadata>,
    mut out: W,
) -> std::io::Result<()> {
    for m in metas {
        let rec = MetadataRecord {
            repo: m.repo_id.clone(),
            url: m.url.clone(),
            created: m.created_on.format("%Y-%m-%d").to_string(),
            archived: m.archived_on.map(|a| a.format("%Y-%m-%d").to_string()),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
