//! Narrow GraphQL client for one repository's activity export.

use std::time::Duration;

use chrono::NaiveDate;
use serde_json::{json, Value};

use super::events::{normalize_record, parse_day, EventRecord};
use super::{ActivityEvent, RepoMetadata};

const QUERY: &str = r#"query($owner: String!, $name: String!, $since: GitTimestamp, $pageSize: Int!, $commitCursor: String, $issueCursor: String) {
  repository(owner: $owner, name: $name) {
    url
    createdAt
    archivedAt
    defaultBranchRef {
      target {
        ... on Commit {
          history(first: $pageSize, since: $since, after: $commitCursor) {
            pageInfo { hasNextPage endCursor }
            nodes { committedDate author { user { login } } }
          }
        }
      }
    }
    issues(first: $pageSize, after: $issueCursor, orderBy: {field: CREATED_AT, direction: DESC}) {
      pageInfo { hasNextPage endCursor }
      nodes {
        createdAt
        authorAssociation
        author { login }
        comments(first: 100) {
          nodes { createdAt authorAssociation author { login } }
        }
      }
    }
  }
}"#;

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub endpoint: String,
    /// Maximum number of HTTP requests for one repository.
    pub request_budget: usize,
    pub page_size: usize,
    /// Oldest day of interest: period start minus the 89-day lookback.
    pub since: Option<NaiveDate>,
    pub until: Option<NaiveDate>,
    pub timeout: Duration,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.github.com/graphql".into(),
            request_budget: 50,
            page_size: 100,
            since: None,
            until: None,
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("authentication rejected")]
    AuthFailure,
    #[error("rate limited, retry after {0}s")]
    RateLimited(u64),
    #[error("repository not found")]
    RepoNotFound,
    #[error("request budget of {0} exhausted")]
    BudgetExhausted(usize),
    #[error("bad repository url {0}")]
    BadUrl(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    Protocol(String),
}

/// Fetched export: normalized metadata and events, plus the raw records with
/// role labels exactly as the API returned them.
#[derive(Debug, Clone)]
pub struct RepositoryExport {
    pub meta: RepoMetadata,
    pub records: Vec<EventRecord>,
    pub events: Vec<ActivityEvent>,
}

fn split_repo_url(url: &str) -> Result<(String, String), FetchError> {
    let trimmed = url.trim_end_matches('/').trim_end_matches(".git");
    let mut parts = trimmed.rsplit('/');
    match (parts.next(), parts.next()) {
        (Some(name), Some(owner)) if !name.is_empty() && !owner.is_empty() && !owner.contains(':') => {
            Ok((owner.to_string(), name.to_string()))
        }
        _ => Err(FetchError::BadUrl(url.to_string())),
    }
}

fn str_at<'a>(v: &'a Value, path: &[&str]) -> Option<&'a str> {
    path.iter().try_fold(v, |acc, key| acc.get(key))?.as_str()
}

fn page_info(conn: &Value) -> (bool, Option<String>) {
    let info = &conn["pageInfo"];
    (
        info["hasNextPage"].as_bool().unwrap_or(false),
        info["endCursor"].as_str().map(str::to_string),
    )
}

fn retry_after(resp: &ureq::http::Response<ureq::Body>) -> u64 {
    resp.headers()
        .get("retry-after")
        .and_then(|v| v.to_str().ok())
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(60)
}

struct Client {
    agent: ureq::Agent,
    endpoint: String,
    token: String,
}

impl Client {
    fn post(&self, body: &Value) -> Result<Value, FetchError> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("bearer {}", self.token))
            .header("User-Agent", "maintcast")
            .send_json(body)
            .map_err(|e| FetchError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        match status {
            401 => return Err(FetchError::AuthFailure),
            429 => return Err(FetchError::RateLimited(retry_after(&resp))),
            403 if resp.headers().contains_key("retry-after")
                || resp
                    .headers()
                    .get("x-ratelimit-remaining")
                    .is_some_and(|v| v.as_bytes() == b"0") =>
            {
                return Err(FetchError::RateLimited(retry_after(&resp)))
            }
            403 => return Err(FetchError::AuthFailure),
            404 => return Err(FetchError::RepoNotFound),
            200..=299 => {}
            other => return Err(FetchError::Protocol(format!("HTTP {other}"))),
        }
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| FetchError::Protocol(e.to_string()))?;
        if let Some(errors) = value.get("errors").and_then(Value::as_array) {
            for err in errors {
                match err["type"].as_str() {
                    Some("NOT_FOUND") => return Err(FetchError::RepoNotFound),
                    Some("RATE_LIMITED") => return Err(FetchError::RateLimited(60)),
                    _ => {}
                }
            }
            if value["data"]["repository"].is_null() {
                return Err(FetchError::Protocol(errors.first().map_or_else(String::new, |e| e.to_string())));
            }
        }
        Ok(value)
    }
}

/// Fetches one repository's metadata, default-branch commit dates and issue
/// activity. Requests are issued sequentially; at most `request_budget` of them.
pub fn fetch_repository_export(
    repo_url: &str,
    auth_token: &str,
    config: &FetchConfig,
) -> Result<RepositoryExport, FetchError> {
    let (owner, name) = split_repo_url(repo_url)?;
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(config.timeout))
        .build()
        .into();
    let client = Client {
        agent,
        endpoint: config.endpoint.clone(),
        token: auth_token.to_string(),
    };
    let repo_id = format!("{owner}/{name}");
    let since = config.since.map(|d| format!("{}T00:00:00Z", d.format("%Y-%m-%d")));
    let in_window = |day: NaiveDate| {
        config.since.is_none_or(|s| day >= s) && config.until.is_none_or(|u| day <= u)
    };

    let mut records = Vec::new();
    let mut meta: Option<RepoMetadata> = None;
    let (mut commit_cursor, mut issue_cursor): (Option<String>, Option<String>) = (None, None);
    let (mut commits_done, mut issues_done) = (false, false);
    let mut requests = 0;

    while !(commits_done && issues_done) {
        if requests == config.request_budget {
            return Err(FetchError::BudgetExhausted(config.request_budget));
        }
        requests += 1;
        let body = json!({
            "query": QUERY,
            "variables": {
                "owner": owner,
                "name": name,
                "since": since,
                "pageSize": config.page_size,
                "commitCursor": commit_cursor,
                "issueCursor": issue_cursor,
            }
        });
        let value = client.post(&body)?;
        let repo = &value["data"]["repository"];
        if repo.is_null() {
            return Err(FetchError::RepoNotFound);
        }
        if meta.is_none() {
            let created = str_at(repo, &["createdAt"])
                .and_then(|s| parse_day(s).ok())
                .ok_or_else(|| FetchError::Protocol("missing createdAt".into()))?;
            let archived = str_at(repo, &["archivedAt"]).and_then(|s| parse_day(s).ok());
            meta = Some(RepoMetadata {
                repo_id: repo_id.clone(),
                created_on: created,
                archived_on: archived,
                url: str_at(repo, &["url"]).unwrap_or(repo_url).to_string(),
            });
        }

        if !commits_done {
            let history = &repo["defaultBranchRef"]["target"]["history"];
            for node in history["nodes"].as_array().into_iter().flatten() {
                if let Some(date) = node["committedDate"].as_str() {
                    records.push(EventRecord {
                        repo: repo_id.clone(),
                        kind: "commit".into(),
                        date: date.to_string(),
                        role: None,
                        author: str_at(node, &["author", "user", "login"]).map(str::to_string),
                    });
                }
            }
            let (next, cursor) = page_info(history);
            commits_done = !next || cursor.is_none();
            commit_cursor = cursor;
        }

        if !issues_done {
            let issues = &repo["issues"];
            for issue in issues["nodes"].as_array().into_iter().flatten() {
                let mut push = |kind: &str, node: &Value| {
                    if let Some(date) = node["createdAt"].as_str() {
                        records.push(EventRecord {
                            repo: repo_id.clone(),
                            kind: kind.into(),
                            date: date.to_string(),
                            role: node["authorAssociation"].as_str().map(str::to_string),
                            author: str_at(node, &["author", "login"]).map(str::to_string),
                        });
                    }
                };
                push("issue_created", issue);
                for comment in issue["comments"]["nodes"].as_array().into_iter().flatten() {
                    push("issue_comment", comment);
                }
            }
            let (next, cursor) = page_info(issues);
            issues_done = !next || cursor.is_none();
            issue_cursor = cursor;
        }
    }

    let meta = meta.ok_or_else(|| FetchError::Protocol("no repository payload".into()))?;
    let mut events = Vec::with_capacity(records.len());
    let mut kept = Vec::with_capacity(records.len());
    for (i, rec) in records.into_iter().enumerate() {
        let ev = normalize_record(&rec, i + 1).map_err(|e| FetchError::Protocol(e.to_string()))?;
        if in_window(ev.date) {
            events.push(ev);
            kept.push(rec);
        }
    }
    Ok(RepositoryExport {
        meta,
        records: kept,
        events,
    })
}
