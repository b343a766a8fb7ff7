//! Leakage-free supervised samples built from monthly points.
//!
//! A sample is a window of `t` consecutive blocks of base features and the
//! target of the block `h` steps after the window end. Tabular models see the
//! window flattened block-major, or the VARMA-style expansion of it.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::targets::{Bucket, MonthlyPoint, Task, Trend};

pub const BASE_FEATURES: usize = 4;
pub const BASE_FEATURE_NAMES: [&str; BASE_FEATURES] =
    ["mean_score", "commit_count", "issue_count", "gated_fraction"];
pub const WINDOW_RANGE: RangeInclusive<usize> = 3..=12;
pub const HORIZON_RANGE: RangeInclusive<usize> = 1..=6;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("window length {0} outside 3..12")]
    WindowOutOfRange(usize),
    #[error("horizon {0} outside 1..6")]
    HorizonOutOfRange(usize),
    #[error("no repository has {0} consecutive blocks in range")]
    EmptySampleSet(usize),
}

/// How targets are read off monthly points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRule {
    pub task: Task,
    /// Stable band half-width for trend types.
    pub epsilon: f64,
}

impl TargetRule {
    pub fn new(task: Task, epsilon: f64) -> Self {
        Self { task, epsilon }
    }

    /// Target of `block` in task units: the rounded score, a bucket or trend
    /// code, or the unrounded slope into `block`.
    pub fn target_at(&self, blocks: &BTreeMap<usize, &MonthlyPoint>, block: usize) -> Option<f64> {
        let p = blocks.get(&block)?;
        let slope = || -> Option<f64> {
            let prev = blocks.get(&block.checked_sub(1)?)?;
            Some(p.mean_score - prev.mean_score)
        };
        Some(match self.task {
            Task::Raw => p.rounded_score as f64,
            Task::Bucket => Bucket::of(p.rounded_score).code() as f64,
            Task::Slope => slope()?,
            Task::TrendType => Trend::of(slope()?, self.epsilon).code() as f64,
        })
    }
}

pub fn base_features<T: Real>(p: &MonthlyPoint) -> [T; BASE_FEATURES] {
    [
        T::of(p.mean_score),
        T::of(p.commit_count as f64),
        T::of(p.issue_count as f64),
        T::of(p.gated_fraction),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOrigin {
    pub repo_id: String,
    pub last_block: usize,
}

/// Windows of shape `(n, t, f)` stored row-major, with one target per window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet<T> {
    pub task: Task,
    pub window_t: usize,
    pub n_features: usize,
    pub inputs: Vec<T>,
    pub targets: Vec<T>,
    pub horizons: Vec<usize>,
    pub origins: Vec<SampleOrigin>,
}

impl<T: Real> SampleSet<T> {
    pub fn empty(task: Task, window_t: usize, n_features: usize) -> Self {
        Self {
            task,
            window_t,
            n_features,
            inputs: Vec::new(),
            targets: Vec::new(),
            horizons: Vec::new(),
            origins: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row_len(&self) -> usize {
        self.window_t * self.n_features
    }

    /// Window `i` as `t * f` values, block-major.
    pub fn window(&self, i: usize) -> &[T] {
        let w = self.row_len();
        &self.inputs[i * w..(i + 1) * w]
    }

    pub fn first_input_block(&self, i: usize) -> usize {
        self.origins[i].last_block + 1 - self.window_t
    }

    pub fn target_block(&self, i: usize) -> usize {
        self.origins[i].last_block + self.horizons[i]
    }

    pub fn push(&mut self, window: &[T], target: T, horizon: usize, origin: SampleOrigin) {
        assert_eq!(window.len(), self.row_len(), "window shape");
        assert!(horizon >= 1, "targets must lie strictly after the window");
        self.inputs.extend_from_slice(window);
        self.targets.push(target);
        self.horizons.push(horizon);
        self.origins.push(origin);
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut out = Self::empty(self.task, self.window_t, self.n_features);
        for &i in idx {
            out.push(self.window(i), self.targets[i], self.horizons[i], self.origins[i].clone());
        }
        out
    }

    pub fn extend(&mut self, other: &SampleSet<T>) {
        assert_eq!((self.window_t, self.n_features), (other.window_t, other.n_features));
        self.inputs.extend_from_slice(&other.inputs);
        self.targets.extend_from_slice(&other.targets);
        self.horizons.extend_from_slice(&other.horizons);
        self.origins.extend(other.origins.iter().cloned());
    }
}

/// Pooled samples from every repository whose window and target both lie in
/// `blocks`. Windows with a missing block or an undefined target are skipped.
/// Samples are ordered by repository, then by window end.
pub fn make_windowed_samples<T: Real>(
    monthly: &BTreeMap<String, Vec<MonthlyPoint>>,
    rule: &TargetRule,
    window_t: usize,
    horizon_h: usize,
    blocks: RangeInclusive<usize>,
) -> Result<SampleSet<T>, FeatureError> {
    if !WINDOW_RANGE.contains(&window_t) {
        return Err(FeatureError::WindowOutOfRange(window_t));
    }
    if !HORIZON_RANGE.contains(&horizon_h) {
        return Err(FeatureError::HorizonOutOfRange(horizon_h));
    }
    let samples = windowed_samples_unchecked(monthly, rule, window_t, horizon_h, blocks);
    if samples.is_empty() {
        return Err(FeatureError::EmptySampleSet(window_t + horizon_h));
    }
    Ok(samples)
}

pub(crate) fn windowed_samples_unchecked<T: Real>(
    monthly: &BTreeMap<String, Vec<MonthlyPoint>>,
    rule: &TargetRule,
    window_t: usize,
    horizon_h: usize,
    blocks: RangeInclusive<usize>,
) -> SampleSet<T> {
    let mut out = SampleSet::empty(rule.task, window_t, BASE_FEATURES);
    let (lo, hi) = (*blocks.start(), *blocks.end());
    if hi < lo + window_t - 1 + horizon_h {
        return out;
    }
    let mut window = Vec::with_capacity(window_t * BASE_FEATURES);
    for (repo, points) in monthly {
        let by_block: BTreeMap<usize, &MonthlyPoint> =
            points.iter().map(|p| (p.block_index, p)).collect();
        for last in (lo + window_t - 1)..=(hi - horizon_h) {
            window.clear();
            let first = last + 1 - window_t;
            let complete = (first..=last).all(|b| match by_block.get(&b) {
                Some(p) => {
                    window.extend(base_features::<T>(p));
                    true
                }
                None => false,
            });
            if !complete {
                continue;
            }
            let Some(target) = rule.target_at(&by_block, last + horizon_h) else {
                continue;
            };
            out.push(
                &window,
                T::of(target),
                horizon_h,
                SampleOrigin {
                    repo_id: repo.clone(),
                    last_block: last,
                },
            );
        }
    }
    out
}

/// Number of expanded features for a `(t, f)` window.
pub fn expanded_len(t: usize, f: usize) -> usize {
    f * t + 4 * f + f * (t - 1) + f * (f - 1) / 2 + f
}

/// VARMA-style expansion of one window, in fixed order:
/// lags per feature; mean, std, min, max per feature; first differences per
/// feature; products of feature means for each pair `j < k`; last minus first per feature.
pub fn varma_feature_expand<T: Real>(window: &[T], t: usize, f: usize) -> Vec<T> {
    assert_eq!(window.len(), t * f, "window shape");
    let col = |j: usize| (0..t).map(move |s| window[s * f + j]);
    let tf = T::of_usize(t);
    let mut out = Vec::with_capacity(expanded_len(t, f));
    for j in 0..f {
        out.extend(col(j));
    }
    let mut means = Vec::with_capacity(f);
    for j in 0..f {
        let mean = col(j).sum::<T>() / tf;
        let var = col(j).map(|v| (v - mean) * (v - mean)).sum::<T>() / tf;
        let min = col(j).fold(T::infinity(), T::min);
        let max = col(j).fold(T::neg_infinity(), T::max);
        out.extend([mean, var.sqrt(), min, max]);
        means.push(mean);
    }
    for j in 0..f {
        out.extend((1..t).map(|s| window[s * f + j] - window[(s - 1) * f + j]));
    }
    for j in 0..f {
        for k in j + 1..f {
            out.push(means[j] * means[k]);
        }
    }
    for j in 0..f {
        out.push(window[(t - 1) * f + j] - window[j]);
    }
    out
}

/// `(n, t * f)` table, block-major then feature order.
pub fn flatten_samples<T: Real>(samples: &SampleSet<T>) -> Matrix<T> {
    Matrix::from_vec(samples.len(), samples.row_len(), samples.inputs.clone())
}

/// Inverse of [`flatten_samples`]: one `t x f` window per row.
pub fn unflatten<T: Real>(table: &Matrix<T>, t: usize, f: usize) -> Vec<Vec<Vec<T>>> {
    assert_eq!(table.cols, t * f);
    (0..table.rows)
        .map(|r| table.row(r).chunks(f).map(<[T]>::to_vec).collect())
        .collect()
}

pub fn expanded_table<T: Real>(samples: &SampleSet<T>) -> Matrix<T> {
    let (t, f) = (samples.window_t, samples.n_features);
    let cols = expanded_len(t, f);
    let mut data = Vec::with_capacity(samples.len() * cols);
    for i in 0..samples.len() {
        data.extend(varma_feature_expand(samples.window(i), t, f));
    }
    Matrix::from_vec(samples.len(), cols, data)
}

/// Column-wise affine standardization fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Real> Standardizer<T> {
    /// Columns with (near) zero spread keep scale 1.
    pub fn fit(table: &Matrix<T>) -> Self {
        let n = T::of_usize(table.rows.max(1));
        let mut mean = vec![T::zero(); table.cols];
        for r in 0..table.rows {
            for (m, &v) in mean.iter_mut().zip(table.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); table.cols];
        for r in 0..table.rows {
            for ((s, &v), &m) in var.iter_mut().zip(table.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let tiny = T::of(1e-12);
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > tiny {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn identity(cols: usize) -> Self {
        Self {
            mean: vec![T::zero(); cols],
            scale: vec![T::one(); cols],
        }
    }

    pub fn apply_row(&self, row: &mut [T]) {
        for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
    }

    pub fn apply(&self, table: &Matrix<T>) -> Matrix<T> {
        let mut out = table.clone();
        for r in 0..out.rows {
            self.apply_row(out.row_mut(r));
        }
        out
    }
}
