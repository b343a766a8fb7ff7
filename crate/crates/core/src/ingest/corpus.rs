use std::collections::BTreeMap;

use chrono::Duration;

use super::{ActivityEvent, IngestError, RepoMetadata};
use crate::period::Period;

/// Days of history kept before the period start; enough for the first
/// in-period 90-day sum.
pub const LOOKBACK_KEEP_DAYS: i64 = 89;

#[derive(Debug, Clone, PartialEq)]
pub struct RepoData {
    pub meta: RepoMetadata,
    pub events: Vec<ActivityEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub period: Period,
    pub repos: BTreeMap<String, RepoData>,
    pub dropped_before: usize,
    pub dropped_after: usize,
}

impl Corpus {
    /// Groups events by repository and clips them to
    /// `[period.start - 89 days, period.end]`.
    pub fn assemble(
        metadata: BTreeMap<String, RepoMetadata>,
        events: Vec<ActivityEvent>,
        period: Period,
    ) -> Result<Self, IngestError> {
        let mut repos: BTreeMap<String, RepoData> = metadata
            .into_iter()
            .map(|(id, meta)| {
                (
                    id,
                    RepoData {
                        meta,
                        events: Vec::new(),
                    },
                )
            })
            .collect();
        let earliest = period.start - Duration::days(LOOKBACK_KEEP_DAYS);
        let (mut dropped_before, mut dropped_after) = (0, 0);
        for ev in events {
            let repo = repos
                .get_mut(&ev.repo_id)
                .ok_or_else(|| IngestError::UnknownRepo(ev.repo_id.clone()))?;
            if ev.date < earliest {
                dropped_before += 1;
            } else if ev.date > period.end {
                dropped_after += 1;
            } else {
                repo.events.push(ev);
            }
        }
        if dropped_before + dropped_after > 0 {
            log::info!("dropped {dropped_before} events before and {dropped_after} after the period");
        }
        Ok(Self {
            period,
            repos,
            dropped_before,
            dropped_after,
        })
    }

    /// Re-clips to another period, keeping the same repositories.
    pub fn restrict(self, period: Period) -> Self {
        let mut meta = BTreeMap::new();
        let mut events = Vec::new();
        for (id, repo) in self.repos {
            meta.insert(id, repo.meta);
            events.extend(repo.events);
        }
        Self::assemble(meta, events, period).expect("events come from known repositories")
    }

    pub fn event_count(&self) -> usize {
        self.repos.values().map(|r| r.events.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn meta(id: &str) -> RepoMetadata {
        RepoMetadata {
            repo_id: id.into(),
            created_on: d("2019-01-01"),
            archived_on: None,
            url: String::new(),
        }
    }

    #[test]
    fn clips_to_lookback_and_end() {
        let period = Period::new(d("2021-01-01"), d("2021-12-31")).unwrap();
        let events = vec![
            ActivityEvent::commit("r", d("2020-10-03")),
            ActivityEvent::commit("r", d("2020-10-04")),
            ActivityEvent::commit("r", d("2021-12-31")),
            ActivityEvent::commit("r", d("2022-01-01")),
        ];
        let c = Corpus::assemble([("r".to_string(), meta("r"))].into(), events, period).unwrap();
        assert_eq!(c.event_count(), 2);
        assert_eq!((c.dropped_before, c.dropped_after), (1, 1));
        for ev in &c.repos["r"].events {
            assert!(ev.date >= period.start - Duration::days(89) && ev.date <= period.end);
        }
    }

    #[test]
    fn unknown_repo_is_an_error() {
        let period = Period::new(d("2021-01-01"), d("2021-12-31")).unwrap();
        let e = Corpus::assemble(BTreeMap::new(), vec![ActivityEvent::commit("x", d("2021-05-05"))], period);
        assert!(matches!(e, Err(IngestError::UnknownRepo(r)) if r == "x"));
    }
}
