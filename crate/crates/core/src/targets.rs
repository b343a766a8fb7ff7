//! Monthly aggregation and the four target representations.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::scorecard::{DailySignals, RepoScores, ScoreSeries, MAX_SCORE};

pub const BLOCK_DAYS: usize = 30;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TargetError {
    #[error("series too short for {0}")]
    TooShort(&'static str),
    #[error("expected a {expected:?} series, got {got:?}")]
    WrongRepresentation { expected: Task, got: Task },
    #[error("score series and signals are not aligned")]
    Misaligned,
}

/// Target representation; also the forecasting task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    Raw,
    Bucket,
    Slope,
    TrendType,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Raw, Task::Bucket, Task::Slope, Task::TrendType];

    pub fn name(self) -> &'static str {
        match self {
            Task::Raw => "raw",
            Task::Bucket => "bucket",
            Task::Slope => "slope",
            Task::TrendType => "trend",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Slope-derived tasks need one block of history before their first target.
    pub fn uses_slope(self) -> bool {
        matches!(self, Task::Slope | Task::TrendType)
    }

    pub fn index(self) -> u64 {
        self as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bucket {
    Low,
    Moderate,
    High,
}

impl Bucket {
    pub fn of(score: u8) -> Self {
        match score {
            0..=2 => Bucket::Low,
            3..=7 => Bucket::Moderate,
            _ => Bucket::High,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Bucket::Low => "low",
            Bucket::Moderate => "moderate",
            Bucket::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Trend {
    Downward,
    Stable,
    Upward,
}

impl Trend {
    /// `|slope| <= epsilon` is stable.
    pub fn of(slope: f64, epsilon: f64) -> Self {
        if slope < -epsilon {
            Trend::Downward
        } else if slope > epsilon {
            Trend::Upward
        } else {
            Trend::Stable
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Trend::Downward => "downward",
            Trend::Stable => "stable",
            Trend::Upward => "upward",
        }
    }
}

/// How the period is cut into monthly blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BlockScheme {
    /// Consecutive 30-day blocks anchored at the period start.
    #[default]
    Fixed30,
    /// Whole calendar months; partial months at either end are dropped.
    CalendarMonth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyPoint {
    pub repo_id: String,
    pub block_index: usize,
    pub start: NaiveDate,
    pub mean_score: f64,
    pub rounded_score: u8,
    pub commit_count: u32,
    pub issue_count: u32,
    pub gated_fraction: f64,
}

fn block_bounds(start: NaiveDate, days: usize, scheme: BlockScheme) -> Vec<(usize, usize)> {
    match scheme {
        BlockScheme::Fixed30 => (0..days / BLOCK_DAYS)
            .map(|k| (k * BLOCK_DAYS, (k + 1) * BLOCK_DAYS))
            .collect(),
        BlockScheme::CalendarMonth => {
            let mut out = Vec::new();
            let mut month_start = if start.day() == 1 {
                start
            } else {
                next_month(start.with_day(1).expect("day 1 exists"))
            };
            loop {
                let next = next_month(month_start);
                let lo = (month_start - start).num_days() as usize;
                let hi = (next - start).num_days() as usize;
                if hi > days {
                    break;
                }
                out.push((lo, hi));
                month_start = next;
            }
            out
        }
    }
}

fn next_month(d: NaiveDate) -> NaiveDate {
    let (y, m) = if d.month() == 12 { (d.year() + 1, 1) } else { (d.year(), d.month() + 1) };
    NaiveDate::from_ymd_opt(y, m, 1).expect("valid month start")
}

/// Averages daily scores per block and sums the activity counts. A trailing
/// partial block is dropped.
pub fn monthly_aggregate(
    series: &ScoreSeries,
    signals: &DailySignals,
    scheme: BlockScheme,
) -> Result<Vec<MonthlyPoint>, TargetError> {
    if series.start != signals.start || series.score.len() != signals.len() {
        return Err(TargetError::Misaligned);
    }
    let blocks = block_bounds(series.start, series.score.len(), scheme);
    if blocks.is_empty() {
        return Err(TargetError::TooShort("one full block"));
    }
    Ok(blocks
        .into_iter()
        .enumerate()
        .map(|(k, (lo, hi))| {
            let n = (hi - lo) as f64;
            let score_sum: u32 = series.score[lo..hi].iter().map(|&s| s as u32).sum();
            let gated: u32 = series.gate[lo..hi].iter().map(|&g| g as u32).sum();
            let mean_score = score_sum as f64 / n;
            MonthlyPoint {
                repo_id: series.repo_id.clone(),
                block_index: k,
                start: series.start + Duration::days(lo as i64),
                mean_score,
                rounded_score: mean_score.round().min(MAX_SCORE as f64) as u8,
                commit_count: signals.commits[lo..hi].iter().sum(),
                issue_count: signals.issue_activity[lo..hi].iter().sum(),
                gated_fraction: gated as f64 / n,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetValues {
    Raw(Vec<u8>),
    Bucket(Vec<Bucket>),
    Slope(Vec<f64>),
    TrendType(Vec<Trend>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSeries {
    pub repo_id: String,
    pub values: TargetValues,
}

impl TargetSeries {
    pub fn representation(&self) -> Task {
        match self.values {
            TargetValues::Raw(_) => Task::Raw,
            TargetValues::Bucket(_) => Task::Bucket,
            TargetValues::Slope(_) => Task::Slope,
            TargetValues::TrendType(_) => Task::TrendType,
        }
    }

    pub fn len(&self) -> usize {
        match &self.values {
            TargetValues::Raw(v) => v.len(),
            TargetValues::Bucket(v) => v.len(),
            TargetValues::Slope(v) => v.len(),
            TargetValues::TrendType(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn raw_series(points: &[MonthlyPoint]) -> TargetSeries {
    TargetSeries {
        repo_id: points.first().map(|p| p.repo_id.clone()).unwrap_or_default(),
        values: TargetValues::Raw(points.iter().map(|p| p.rounded_score).collect()),
    }
}

pub fn bucketize(raw: &TargetSeries) -> Result<TargetSeries, TargetError> {
    match &raw.values {
        TargetValues::Raw(v) => Ok(TargetSeries {
            repo_id: raw.repo_id.clone(),
            values: TargetValues::Bucket(v.iter().map(|&s| Bucket::of(s)).collect()),
        }),
        _ => Err(TargetError::WrongRepresentation {
            expected: Task::Raw,
            got: raw.representation(),
        }),
    }
}

/// Differences of consecutive unrounded monthly means.
pub fn slope_series(repo_id: &str, means: &[f64]) -> Result<TargetSeries, TargetError> {
    if means.len() < 2 {
        return Err(TargetError::TooShort("a slope"));
    }
    Ok(TargetSeries {
        repo_id: repo_id.to_string(),
        values: TargetValues::Slope(means.windows(2).map(|w| w[1] - w[0]).collect()),
    })
}

pub fn trend_type(slopes: &TargetSeries, epsilon: f64) -> Result<TargetSeries, TargetError> {
    match &slopes.values {
        TargetValues::Slope(v) => Ok(TargetSeries {
            repo_id: slopes.repo_id.clone(),
            values: TargetValues::TrendType(v.iter().map(|&s| Trend::of(s, epsilon)).collect()),
        }),
        _ => Err(TargetError::WrongRepresentation {
            expected: Task::Slope,
            got: slopes.representation(),
        }),
    }
}

/// True when every rounded monthly score is 0, or every one is 10.
pub fn is_constant_extreme(raw: &[u8]) -> bool {
    !raw.is_empty() && (raw.iter().all(|&s| s == 0) || raw.iter().all(|&s| s == MAX_SCORE))
}

/// Drops repositories whose raw series sits at 0 or at 10 for the whole period.
pub fn filter_constant_extremes(
    targets: BTreeMap<String, TargetSeries>,
) -> (BTreeMap<String, TargetSeries>, usize) {
    let before = targets.len();
    let kept: BTreeMap<_, _> = targets
        .into_iter()
        .filter(|(_, t)| !matches!(&t.values, TargetValues::Raw(v) if is_constant_extreme(v)))
        .collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// Same filter applied to monthly points directly.
pub fn filter_monthly_extremes(
    monthly: BTreeMap<String, Vec<MonthlyPoint>>,
) -> (BTreeMap<String, Vec<MonthlyPoint>>, usize) {
    let before = monthly.len();
    let kept: BTreeMap<_, _> = monthly
        .into_iter()
        .filter(|(_, pts)| {
            let raw: Vec<u8> = pts.iter().map(|p| p.rounded_score).collect();
            !is_constant_extreme(&raw)
        })
        .collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// Monthly points of every reconstructed repository.
pub fn corpus_monthly(
    scores: &BTreeMap<String, RepoScores>,
    scheme: BlockScheme,
) -> Result<BTreeMap<String, Vec<MonthlyPoint>>, TargetError> {
    scores
        .iter()
        .map(|(id, s)| Ok((id.clone(), monthly_aggregate(&s.series, &s.signals, scheme)?)))
        .collect()
}
