//! Daily Maintained-score reconstruction.
//!
//! Commits and core-role issue activity are counted per day, summed over an
//! inclusive 90-day lookback, scaled so that one activity per week scores 10,
//! gated by repository age and archival, clipped and rounded. The scaling
//! constant `lookback_days / days_in_one_week` is kept as an exact rational.

use std::collections::{BTreeMap, HashSet};

use chrono::{Duration, NaiveDate};
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{ActivityEvent, Corpus, EventKind, RepoData, RepoMetadata};
use crate::period::Period;

pub const MAX_SCORE: u8 = 10;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("events span repositories {0} and {1}")]
    MixedRepos(String, String),
    #[error("score parameters must be strictly positive")]
    InvalidParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreParams {
    pub lookback_days: u32,
    pub activity_per_week: u32,
    pub days_in_one_week: u32,
    /// Minimum repository age before the gate opens.
    pub min_age_days: u32,
    /// Whether the gate is already open on exactly `created_on + min_age_days`.
    pub gate_boundary_inclusive: bool,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self {
            lookback_days: 90,
            activity_per_week: 1,
            days_in_one_week: 7,
            min_age_days: 90,
            gate_boundary_inclusive: true,
        }
    }
}

impl ScoreParams {
    pub fn validate(&self) -> Result<(), ScoreError> {
        if self.lookback_days == 0 || self.activity_per_week == 0 || self.days_in_one_week == 0 {
            return Err(ScoreError::InvalidParams);
        }
        Ok(())
    }
}

/// Per-day commit counts and deduplicated core-role issue activity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailySignals {
    pub repo_id: String,
    pub start: NaiveDate,
    pub commits: Vec<u32>,
    pub issue_activity: Vec<u32>,
}

impl DailySignals {
    pub fn len(&self) -> usize {
        self.commits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commits.is_empty()
    }

    pub fn trim_to(&self, period: Period) -> DailySignals {
        let skip = (period.start - self.start).num_days().max(0) as usize;
        let take = period.days().min(self.len().saturating_sub(skip));
        DailySignals {
            repo_id: self.repo_id.clone(),
            start: self.start + Duration::days(skip as i64),
            commits: self.commits[skip..skip + take].to_vec(),
            issue_activity: self.issue_activity[skip..skip + take].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollingSums {
    pub repo_id: String,
    pub start: NaiveDate,
    pub commit_sum: Vec<u32>,
    pub issue_sum: Vec<u32>,
}

impl RollingSums {
    pub fn trim_to(&self, period: Period) -> RollingSums {
        let skip = (period.start - self.start).num_days().max(0) as usize;
        let take = period.days().min(self.commit_sum.len().saturating_sub(skip));
        RollingSums {
            repo_id: self.repo_id.clone(),
            start: self.start + Duration::days(skip as i64),
            commit_sum: self.commit_sum[skip..skip + take].to_vec(),
            issue_sum: self.issue_sum[skip..skip + take].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub values: Vec<u8>,
    pub open: NaiveDate,
    pub close: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    pub repo_id: String,
    pub start: NaiveDate,
    pub gate: Vec<u8>,
    pub raw_unrounded: Vec<f64>,
    pub score: Vec<u8>,
    pub gate_open: NaiveDate,
    pub gate_close: NaiveDate,
}

/// Counts commits and core-role issue activity per day of `period`.
///
/// Issue events are collapsed so each `(date, role, kind)` triple contributes
/// at most one. Events outside `period` are ignored.
pub fn build_daily_signals(
    repo_id: &str,
    events: &[ActivityEvent],
    period: Period,
) -> Result<DailySignals, ScoreError> {
    let n = period.days();
    let mut commits = vec![0u32; n];
    let mut issue_activity = vec![0u32; n];
    let mut seen = HashSet::new();
    for ev in events {
        if ev.repo_id != repo_id {
            return Err(ScoreError::MixedRepos(repo_id.to_string(), ev.repo_id.clone()));
        }
        if !period.contains(ev.date) {
            continue;
        }
        let day = period.offset(ev.date) as usize;
        match ev.kind {
            EventKind::Commit => commits[day] += 1,
            kind if ev.author_role.is_core() => {
                if seen.insert((ev.date, ev.author_role, kind)) {
                    issue_activity[day] += 1;
                }
            }
            _ => {}
        }
    }
    Ok(DailySignals {
        repo_id: repo_id.to_string(),
        start: period.start,
        commits,
        issue_activity,
    })
}

fn trailing_sum(values: &[u32], window: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0u32;
    for (t, &v) in values.iter().enumerate() {
        acc += v;
        if t >= window {
            acc -= values[t - window];
        }
        out.push(acc);
    }
    out
}

/// Inclusive trailing sums over `lookback_days` days; days before the series start count as 0.
pub fn rolling_window_sums(signals: &DailySignals, params: &ScoreParams) -> RollingSums {
    let w = params.lookback_days as usize;
    RollingSums {
        repo_id: signals.repo_id.clone(),
        start: signals.start,
        commit_sum: trailing_sum(&signals.commits, w),
        issue_sum: trailing_sum(&signals.issue_activity, w),
    }
}

pub fn availability_gate(meta: &RepoMetadata, period: Period, params: &ScoreParams) -> Gate {
    let open = meta.created_on + Duration::days(params.min_age_days as i64);
    let close = meta.archived_on.unwrap_or(period.end);
    let values = period
        .iter_days()
        .map(|t| {
            let after_open = if params.gate_boundary_inclusive { open <= t } else { open < t };
            u8::from(after_open && t <= close)
        })
        .collect();
    Gate { values, open, close }
}

/// Unrounded score `10 * sum / (activity_per_week * lookback_days / days_in_one_week)`.
pub fn unrounded_score(activity: u32, params: &ScoreParams) -> Ratio<i64> {
    Ratio::new(
        10 * activity as i64 * params.days_in_one_week as i64,
        params.activity_per_week as i64 * params.lookback_days as i64,
    )
}

/// Final integer score for one day.
pub fn daily_score(activity: u32, gate: u8, params: &ScoreParams) -> u8 {
    if gate == 0 {
        return 0;
    }
    let capped = unrounded_score(activity, params).min(Ratio::from_integer(MAX_SCORE as i64));
    *capped.round().numer() as u8
}

pub fn maintained_score_series(sums: &RollingSums, gate: &Gate, params: &ScoreParams) -> ScoreSeries {
    assert_eq!(sums.commit_sum.len(), gate.values.len(), "sums and gate must share a day index");
    let mut raw_unrounded = Vec::with_capacity(gate.values.len());
    let mut score = Vec::with_capacity(gate.values.len());
    for ((&c, &i), &g) in sums.commit_sum.iter().zip(&sums.issue_sum).zip(&gate.values) {
        let r = unrounded_score(c + i, params);
        raw_unrounded.push(*r.numer() as f64 / *r.denom() as f64);
        score.push(daily_score(c + i, g, params));
    }
    ScoreSeries {
        repo_id: sums.repo_id.clone(),
        start: sums.start,
        gate: gate.values.clone(),
        raw_unrounded,
        score,
        gate_open: gate.open,
        gate_close: gate.close,
    }
}

/// Everything reconstructed for one repository over the experiment period.
#[derive(Debug, Clone, PartialEq)]
pub struct RepoScores {
    pub signals: DailySignals,
    pub sums: RollingSums,
    pub series: ScoreSeries,
}

/// Runs the full reconstruction for one repository. Signals are built with
/// `lookback_days - 1` extra days of history so the first in-period sums are complete.
pub fn reconstruct_repo(
    repo: &RepoData,
    period: Period,
    params: &ScoreParams,
) -> Result<RepoScores, ScoreError> {
    params.validate()?;
    let extended = period.with_lookback(params.lookback_days - 1);
    let signals = build_daily_signals(&repo.meta.repo_id, &repo.events, extended)?;
    let sums = rolling_window_sums(&signals, params).trim_to(period);
    let gate = availability_gate(&repo.meta, period, params);
    let series = maintained_score_series(&sums, &gate, params);
    Ok(RepoScores {
        signals: signals.trim_to(period),
        sums,
        series,
    })
}

/// Reconstructs every repository of a corpus over its period, in parallel.
pub fn reconstruct_corpus(corpus: &Corpus, params: &ScoreParams) -> Result<BTreeMap<String, RepoScores>, ScoreError> {
    corpus
        .repos
        .par_iter()
        .map(|(id, repo)| Ok((id.clone(), reconstruct_repo(repo, corpus.period, params)?)))
        .collect::<Result<Vec<_>, _>>()
        .map(|v| v.into_iter().collect())
}
