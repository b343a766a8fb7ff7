use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{read_to_string, IngestError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Commit,
    IssueCreated,
    IssueComment,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Commit => "commit",
            EventKind::IssueCreated => "issue_created",
            EventKind::IssueComment => "issue_comment",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "commit" => Some(EventKind::Commit),
            "issue_created" => Some(EventKind::IssueCreated),
            "issue_comment" => Some(EventKind::IssueComment),
            _ => None,
        }
    }

    pub fn is_issue(self) -> bool {
        !matches!(self, EventKind::Commit)
    }
}

/// Author association of an issue participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Owner,
    Member,
    Collaborator,
    Other,
}

impl Role {
    /// Maps a role label to a role. Anything outside the three core labels is `Other`.
    pub fn from_label(label: &str) -> Self {
        match label.trim().to_ascii_uppercase().as_str() {
            "OWNER" => Role::Owner,
            "MEMBER" => Role::Member,
            "COLLABORATOR" => Role::Collaborator,
            _ => Role::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Owner => "OWNER",
            Role::Member => "MEMBER",
            Role::Collaborator => "COLLABORATOR",
            Role::Other => "OTHER",
        }
    }

    /// Owner, member and collaborator are the roles whose issue activity counts.
    pub fn is_core(self) -> bool {
        !matches!(self, Role::Other)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub repo_id: String,
    pub kind: EventKind,
    pub date: NaiveDate,
    pub author_role: Role,
    /// Contributor identity; only used by the stability analytics.
    pub author: Option<String>,
}

impl ActivityEvent {
    pub fn commit(repo_id: impl Into<String>, date: NaiveDate) -> Self {
        Self {
            repo_id: repo_id.into(),
            kind: EventKind::Commit,
            date,
            author_role: Role::Other,
            author: None,
        }
    }

    pub fn issue(repo_id: impl Into<String>, kind: EventKind, date: NaiveDate, role: Role) -> Self {
        Self {
            repo_id: repo_id.into(),
            kind,
            date,
            author_role: role,
            author: None,
        }
    }

    pub fn by(mut self, author: impl Into<String>) -> Self {
        self.author = Some(author.into());
        self
    }

    fn sort_key(&self) -> (&str, NaiveDate, EventKind, Role, Option<&str>) {
        (
            &self.repo_id,
            self.date,
            self.kind,
            self.author_role,
            self.author.as_deref(),
        )
    }
}

/// One line of an event log as it appears on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub repo: String,
    pub kind: String,
    pub date: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateError {
    Malformed,
    Invalid,
}

fn looks_like_date(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() >= 10
        && b[..4].iter().all(u8::is_ascii_digit)
        && b[4] == b'-'
        && b[5..7].iter().all(u8::is_ascii_digit)
        && b[7] == b'-'
        && b[8..10].iter().all(u8::is_ascii_digit)
}

/// Parses an ISO-8601 date or datetime into a UTC calendar day.
///
/// Datetimes with an offset are converted to UTC before truncation; datetimes
/// without one are taken as UTC.
pub fn parse_day(s: &str) -> Result<NaiveDate, DateError> {
    let s = s.trim();
    if !looks_like_date(s) {
        return Err(DateError::Malformed);
    }
    let day = NaiveDate::parse_from_str(&s[..10], "%Y-%m-%d").map_err(|_| DateError::Invalid)?;
    if s.len() == 10 {
        return Ok(day);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc).date_naive());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.date());
        }
    }
    Err(DateError::Malformed)
}

/// Normalizes one on-disk record. `line_no` is only used for error reporting.
pub fn normalize_record(rec: &EventRecord, line_no: usize) -> Result<ActivityEvent, IngestError> {
    let kind = EventKind::parse(&rec.kind).ok_or(IngestError::MalformedRecord(line_no))?;
    if rec.repo.is_empty() {
        return Err(IngestError::MalformedRecord(line_no));
    }
    let date = parse_day(&rec.date).map_err(|e| match e {
        DateError::Malformed => IngestError::MalformedRecord(line_no),
        DateError::Invalid => IngestError::InvalidDate(line_no),
    })?;
    let author_role = match kind {
        EventKind::Commit => Role::Other,
        _ => rec.role.as_deref().map_or(Role::Other, Role::from_label),
    };
    Ok(ActivityEvent {
        repo_id: rec.repo.clone(),
        kind,
        date,
        author_role,
        author: rec.author.clone(),
    })
}

pub fn parse_event_log(content: &str) -> Result<Vec<ActivityEvent>, IngestError> {
    let mut out = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EventRecord =
            serde_json::from_str(line).map_err(|_| IngestError::MalformedRecord(line_no))?;
        out.push(normalize_record(&rec, line_no)?);
    }
    Ok(out)
}

/// Reads a line-delimited event log, preserving file order.
pub fn read_event_log(path: impl AsRef<Path>) -> Result<Vec<ActivityEvent>, IngestError> {
    parse_event_log(&read_to_string(path.as_ref())?)
}

/// Writes events in canonical form: sorted by repository, date and kind, one
/// object per line, LF endings.
pub fn write_event_log<W: Write>(events: &[ActivityEvent], mut out: W) -> std::io::Result<()> {
    let mut sorted: Vec<&ActivityEvent> = events.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    for ev in sorted {
        let rec = EventRecord {
            repo: ev.repo_id.clone(),
            kind: ev.kind.as_str().to_string(),
            date: ev.date.format("%Y-%m-%d").to_string(),
            role: ev.kind.is_issue().then(|| ev.author_role.as_str().to_string()),
            author: ev.author.clone(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
