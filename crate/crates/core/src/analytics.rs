//! Dataset feasibility statistics: mean days between activities and
//! month-over-month contributor stability.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::ingest::{ActivityEvent, Corpus, EventKind};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("repository {0} has events without an author identity")]
    MissingAuthorField(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActivityKind {
    Commit,
    Issue,
}

impl ActivityKind {
    /// Commits count for any author; issue activity only for core roles.
    pub fn matches(self, ev: &ActivityEvent) -> bool {
        match self {
            ActivityKind::Commit => ev.kind == EventKind::Commit,
            ActivityKind::Issue => ev.kind.is_issue() && ev.author_role.is_core(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub year: i32,
    pub mean_commit_gap_days: f64,
    pub active_commit_repos: usize,
    pub mean_issue_gap_days: f64,
    pub active_issue_repos: usize,
    pub overall_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityStats {
    pub year: i32,
    pub mean_commit_jaccard: f64,
    pub active_commit_repos: usize,
    pub mean_issue_jaccard: f64,
    pub active_issue_repos: usize,
}

/// Mean spacing of sorted distinct days: `(last - first) / (n - 1)`.
pub fn mean_gap(days: &BTreeSet<NaiveDate>) -> Option<f64> {
    if days.len() < 2 {
        return None;
    }
    let first = *days.first()?;
    let last = *days.last()?;
    Some((last - first).num_days() as f64 / (days.len() - 1) as f64)
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn kind_gap(corpus: &Corpus, year: i32, kind: ActivityKind) -> (f64, usize) {
    let gaps: Vec<f64> = corpus
        .repos
        .values()
        .filter_map(|repo| {
            let days: BTreeSet<NaiveDate> = repo
                .events
                .iter()
                .filter(|e| e.date.year() == year && kind.matches(e))
                .map(|e| e.date)
                .collect();
            mean_gap(&days)
        })
        .collect();
    (mean(&gaps), gaps.len())
}

/// Average days between activities per repository, averaged over repositories
/// with at least two distinct activity days of that kind in `year`.
pub fn mean_interactivity_days(corpus: &Corpus, year: i32) -> IntervalStats {
    let (commit, commit_repos) = kind_gap(corpus, year, ActivityKind::Commit);
    let (issue, issue_repos) = kind_gap(corpus, year, ActivityKind::Issue);
    let overall_mean = match (commit_repos > 0, issue_repos > 0) {
        (true, true) => (commit + issue) / 2.0,
        (true, false) => commit,
        (false, true) => issue,
        (false, false) => 0.0,
    };
    IntervalStats {
        year,
        mean_commit_gap_days: commit,
        active_commit_repos: commit_repos,
        mean_issue_gap_days: issue,
        active_issue_repos: issue_repos,
        overall_mean,
    }
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Option<f64> {
    let union = a.union(b).count();
    if union == 0 {
        return None;
    }
    Some(a.intersection(b).count() as f64 / union as f64)
}

/// Mean Jaccard similarity of one repository's contributor sets over
/// consecutive calendar months of `year`, or `None` when the repository is
/// never active in two consecutive months. Pairs with both months empty are skipped.
pub fn repo_month_jaccard(
    events: &[ActivityEvent],
    year: i32,
    kind: ActivityKind,
) -> Result<Option<f64>, AnalyticsError> {
    let mut months: BTreeMap<u32, BTreeSet<&str>> = (1..=12).map(|m| (m, BTreeSet::new())).collect();
    for ev in events.iter().filter(|e| e.date.year() == year && kind.matches(e)) {
        let who = ev
            .author
            .as_deref()
            .ok_or_else(|| AnalyticsError::MissingAuthorField(ev.repo_id.clone()))?;
        months.get_mut(&ev.date.month()).expect("month in 1..=12").insert(who);
    }
    let mut values = Vec::new();
    let mut active_pair = false;
    for m in 1..12 {
        let (a, b) = (&months[&m], &months[&(m + 1)]);
        if let Some(j) = jaccard(a, b) {
            values.push(j);
            active_pair |= !a.is_empty() && !b.is_empty();
        }
    }
    Ok(active_pair.then(|| mean(&values)))
}

/// Mean month-over-month contributor Jaccard similarity for one activity kind.
pub fn monthly_contributor_jaccard(
    corpus: &Corpus,
    year: i32,
    kind: ActivityKind,
) -> Result<(f64, usize), AnalyticsError> {
    let mut per_repo = Vec::new();
    for repo in corpus.repos.values() {
        if let Some(j) = repo_month_jaccard(&repo.events, year, kind)? {
            per_repo.push(j);
        }
    }
    Ok((mean(&per_repo), per_repo.len()))
}

pub fn contributor_stability(corpus: &Corpus, year: i32) -> Result<StabilityStats, AnalyticsError> {
    let (commit, commit_repos) = monthly_contributor_jaccard(corpus, year, ActivityKind::Commit)?;
    let (issue, issue_repos) = monthly_contributor_jaccard(corpus, year, ActivityKind::Issue)?;
    Ok(StabilityStats {
        year,
        mean_commit_jaccard: commit,
        active_commit_repos: commit_repos,
        mean_issue_jaccard: issue,
        active_issue_repos: issue_repos,
    })
}
