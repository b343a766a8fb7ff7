//! Forecasting grid: shifted train/test splits, discretized scoring and
//! distribution summaries.
//!
//! For a grid with `n` shifts over `B` blocks the test blocks are the last
//! `n` blocks, `B - n .. B - 1`. Shift `s` tests block `B - n + s` with the
//! window ending `h` blocks earlier, and trains on every window whose target
//! lies strictly before the test block.

pub mod labels;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::{windowed_samples_unchecked, SampleOrigin, SampleSet, TargetRule, HORIZON_RANGE, WINDOW_RANGE};
use crate::models::{self, ForestParams, LstmParams, ModelConfig, ModelError, ModelKind, TrainedModel};
use crate::scalar::Real;
use crate::seed;
use crate::targets::{Bucket, MonthlyPoint, Task};

pub use labels::{discretize, LabelSpace};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("prediction and truth lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no labels to score")]
    EmptyInput,
    #[error("label {0} is outside the label space")]
    UnknownLabel(i64),
    #[error("invalid grid: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
    #[error("leakage in {0}: a training sample reaches the test block")]
    Leakage(CellKey),
    #[error("coarsened accuracy below raw accuracy in {0}")]
    CoarseningViolation(CellKey),
    #[error("{cell}: {source}")]
    Model { cell: CellKey, source: ModelError },
}

pub fn accuracy(pred: &[i64], truth: &[i64]) -> Result<f64, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Counts with true labels on rows and predictions on columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub labels: Vec<i64>,
    pub counts: Vec<Vec<u64>>,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Rows divided by their sums; empty rows stay zero.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let s: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if s == 0 { 0.0 } else { c as f64 / s as f64 })
                    .collect()
            })
            .collect()
    }

    pub fn add(&mut self, other: &Confusion) {
        assert_eq!(self.labels, other.labels);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Unweighted mean of per-label F1 over labels that occur as truth or prediction.
    pub fn macro_f1(&self) -> f64 {
        let k = self.labels.len();
        let mut sum = 0.0;
        let mut n = 0;
        for i in 0..k {
            let tp = self.counts[i][i] as f64;
            let row: u64 = self.counts[i].iter().sum();
            let col: u64 = (0..k).map(|r| self.counts[r][i]).sum();
            if row == 0 && col == 0 {
                continue;
            }
            n += 1;
            sum += 2.0 * tp / (row + col) as f64;
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

pub fn confusion_matrix(pred: &[i64], truth: &[i64], labels: &[i64]) -> Result<Confusion, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    let pos = |c: i64| labels.iter().position(|&l| l == c).ok_or(EvalError::UnknownLabel(c));
    let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
    for (&p, &t) in pred.iter().zip(truth) {
        let (i, j) = (pos(t)?, pos(p)?);
        counts[i][j] += 1;
    }
    Ok(Confusion {
        labels: labels.to_vec(),
        counts,
    })
}

pub fn mean_absolute_error(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(a, b)| (a - b).abs()).sum::<f64>() / pred.len().max(1) as f64
}

/// Coefficient of determination. A constant truth gives 1 for a perfect fit and 0 otherwise.
pub fn r_squared(pred: &[f64], truth: &[f64]) -> f64 {
    let n = truth.len().max(1) as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let ss_tot: f64 = truth.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, y)| (y - p) * (y - p)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Coordinates of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub task: Task,
    pub model: ModelKind,
    pub window: usize,
    pub horizon: usize,
    pub shift: usize,
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "cell(task={}, model={}, window={}, horizon={}, shift={})",
            self.task.name(),
            self.model.name(),
            self.window,
            self.horizon,
            self.shift
        )
    }
}

impl CellKey {
    pub fn seed(&self, base: u64) -> u64 {
        seed::derive(
            base,
            &[
                self.task.index(),
                self.model.index(),
                self.window as u64,
                self.horizon as u64,
                self.shift as u64,
            ],
        )
    }
}

/// One scored test sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPrediction {
    pub repo_id: String,
    pub truth: f64,
    pub prediction: f64,
    pub true_code: i64,
    pub pred_code: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub key: CellKey,
    pub test_block: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    /// Accuracy after mapping raw-score labels onto buckets; raw task only.
    pub coarse_accuracy: Option<f64>,
    pub confusion: Confusion,
    pub mae: f64,
    pub r2: f64,
    pub macro_f1: f64,
    pub seed: u64,
    pub predictions: Option<Vec<TestPrediction>>,
}

fn coarse(code: i64) -> i64 {
    Bucket::of(code.clamp(0, 10) as u8).code() as i64
}

/// Scores raw predictions against truth values for one cell.
pub fn score_cell(
    key: CellKey,
    space: &LabelSpace,
    predictions: &[f64],
    truth: &[f64],
    repos: Option<&[String]>,
) -> Result<EvaluationRecord, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch(predictions.len(), truth.len()));
    }
    let pred = discretize(space, predictions);
    let true_codes = discretize(space, truth);
    let acc = accuracy(&pred, &true_codes)?;
    let confusion = confusion_matrix(&pred, &true_codes, &space.codes())?;
    let coarse_accuracy = match space.task {
        Task::Raw => {
            let p: Vec<i64> = pred.iter().map(|&c| coarse(c)).collect();
            let t: Vec<i64> = true_codes.iter().map(|&c| coarse(c)).collect();
            Some(accuracy(&p, &t)?)
        }
        _ => None,
    };
    let (mae, r2) = match space.task {
        Task::Raw | Task::Slope => (mean_absolute_error(predictions, truth), r_squared(predictions, truth)),
        Task::Bucket | Task::TrendType => {
            let p: Vec<f64> = pred.iter().map(|&c| space.value(c)).collect();
            let t: Vec<f64> = true_codes.iter().map(|&c| space.value(c)).collect();
            (mean_absolute_error(&p, &t), r_squared(&p, &t))
        }
    };
    let predictions = repos.map(|repos| {
        repos
            .iter()
            .enumerate()
            .map(|(i, r)| TestPrediction {
                repo_id: r.clone(),
                truth: truth[i],
                prediction: predictions[i],
                true_code: true_codes[i],
                pred_code: pred[i],
            })
            .collect()
    });
    Ok(EvaluationRecord {
        key,
        test_block: 0,
        n_train: 0,
        n_test: truth.len(),
        accuracy: acc,
        coarse_accuracy,
        macro_f1: confusion.macro_f1(),
        confusion,
        mae,
        r2,
        seed: 0,
        predictions,
    })
}

/// Constant prediction of the modal discretized training label.
pub fn majority_baseline_cell(space: &LabelSpace, train: &[f64], test: &[f64]) -> Result<EvaluationRecord, EvalError> {
    let codes = discretize(space, train);
    let code = models::modal_label(&codes).ok_or(EvalError::EmptyInput)?;
    let key = CellKey {
        task: space.task,
        model: ModelKind::Majority,
        window: 0,
        horizon: 0,
        shift: 0,
    };
    let value = space.value(code);
    score_cell(key, space, &vec![value; test.len()], test, None)
}

/// Passes iff every input block and every target block of `samples` lies
/// strictly before `test_block`.
pub fn leakage_check<T: Real>(samples: &SampleSet<T>, test_block: usize) -> bool {
    (0..samples.len()).all(|i| samples.origins[i].last_block < test_block && samples.target_block(i) < test_block)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub tasks: Vec<Task>,
    pub models: Vec<ModelKind>,
    pub windows: Vec<usize>,
    pub horizons: Vec<usize>,
    pub shifts: usize,
    pub base_seed: u64,
    pub epsilon: f64,
    pub slope_step: f64,
    pub ridge_lambda: f64,
    pub forest: ForestParams,
    pub lstm: LstmParams,
    /// Only train on windows whose target lies in the last `n` blocks before
    /// the test block. `None` uses all history.
    pub train_history: Option<usize>,
    /// Keep per-repository predictions on each record.
    pub keep_predictions: bool,
    /// Test hook: plants a sample that reaches the test block in the first
    /// training set, which must abort the run.
    #[serde(skip)]
    pub inject_leak: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            tasks: Task::ALL.to_vec(),
            models: vec![ModelKind::VarmaStat, ModelKind::RandomForest, ModelKind::Lstm],
            windows: WINDOW_RANGE.collect(),
            horizons: HORIZON_RANGE.collect(),
            shifts: 12,
            base_seed: 0,
            epsilon: 0.5,
            slope_step: 1.0,
            ridge_lambda: 1.0,
            forest: ForestParams::default(),
            lstm: LstmParams::default(),
            train_history: None,
            keep_predictions: false,
            inject_leak: false,
        }
    }
}

impl GridSpec {
    /// Every problem with the spec, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.tasks.is_empty() {
            out.push("no tasks selected".to_string());
        }
        if self.models.is_empty() {
            out.push("no models selected".to_string());
        }
        if self.windows.is_empty() {
            out.push("no windows selected".to_string());
        }
        if self.horizons.is_empty() {
            out.push("no horizons selected".to_string());
        }
        for &w in &self.windows {
            if !WINDOW_RANGE.contains(&w) {
                out.push(format!("window outside 3..12: {w}"));
            }
        }
        for &h in &self.horizons {
            if !HORIZON_RANGE.contains(&h) {
                out.push(format!("horizon outside 1..6: {h}"));
            }
        }
        if self.shifts == 0 {
            out.push("shifts must be at least 1".to_string());
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            out.push(format!("trend epsilon {} must be non-negative", self.epsilon));
        }
        if !(self.slope_step > 0.0 && self.slope_step.is_finite()) {
            out.push(format!("slope step {} must be positive", self.slope_step));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            out.push(format!("ridge lambda {} must be non-negative", self.ridge_lambda));
        }
        if self.forest.n_trees == 0 {
            out.push("forest needs at least one tree".to_string());
        }
        if let Err(e) = self.lstm.validate() {
            out.push(e);
        }
        if self.train_history == Some(0) {
            out.push("train history must be at least one block".to_string());
        }
        out
    }

    /// Models that produce records: the configured ones plus the majority baseline.
    pub fn record_models(&self) -> Vec<ModelKind> {
        let mut m = self.models.clone();
        m.push(ModelKind::Majority);
        m.sort();
        m.dedup();
        m
    }

    /// Blocks a `(window, horizon)` pair needs: one training window ahead of
    /// every test block.
    pub fn blocks_needed(&self, window: usize, horizon: usize) -> usize {
        window + horizon + self.shifts
    }

    fn model_config(&self, kind: ModelKind, task: Task, seed_value: u64) -> ModelConfig {
        ModelConfig {
            kind,
            seed: seed_value,
            task,
            slope_step: self.slope_step,
            ridge_lambda: self.ridge_lambda,
            forest: self.forest,
            lstm: self.lstm,
        }
    }
}

/// A cell the grid would evaluate, with its test block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlannedCell {
    pub key: CellKey,
    pub test_block: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub key: CellKey,
    pub reason: String,
}

/// Cells of the grid on `n_blocks` blocks, in canonical order, and those that
/// lack history.
pub fn plan_grid(spec: &GridSpec, n_blocks: usize) -> (Vec<PlannedCell>, Vec<SkippedCell>) {
    let mut planned = Vec::new();
    let mut skipped = Vec::new();
    let mut tasks = spec.tasks.clone();
    tasks.sort();
    tasks.dedup();
    let mut windows = spec.windows.clone();
    windows.sort();
    windows.dedup();
    let mut horizons = spec.horizons.clone();
    horizons.sort();
    horizons.dedup();
    for &task in &tasks {
        for model in spec.record_models() {
            for &window in &windows {
                for &horizon in &horizons {
                    let need = spec.blocks_needed(window, horizon);
                    for shift in 0..spec.shifts {
                        let key = CellKey {
                            task,
                            model,
                            window,
                            horizon,
                            shift,
                        };
                        if n_blocks < need {
                            skipped.push(SkippedCell {
                                key,
                                reason: format!("insufficient history: {n_blocks} blocks, {need} needed"),
                            });
                        } else {
                            planned.push(PlannedCell {
                                key,
                                test_block: n_blocks - spec.shifts + shift,
                            });
                        }
                    }
                }
            }
        }
    }
    (planned, skipped)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridOutcome {
    pub records: Vec<EvaluationRecord>,
    pub skipped: Vec<SkippedCell>,
    pub n_blocks: usize,
    pub n_repos: usize,
}

/// Training and test samples of one `(task, window, horizon)` at one test block.
pub struct Split<T> {
    pub train: SampleSet<T>,
    pub test: SampleSet<T>,
}

pub fn make_split<T: Real>(
    monthly: &BTreeMap<String, Vec<MonthlyPoint>>,
    rule: &TargetRule,
    window: usize,
    horizon: usize,
    test_block: usize,
    train_history: Option<usize>,
) -> Split<T> {
    let last_target = test_block - 1;
    let first = match train_history {
        Some(n) => (last_target + 1).saturating_sub(n + window + horizon - 1),
        None => 0,
    };
    let train = windowed_samples_unchecked(monthly, rule, window, horizon, first..=last_target);
    let test = windowed_samples_unchecked(monthly, rule, window, horizon, (test_block + 1 - window - horizon)..=test_block);
    Split { train, test }
}

fn n_blocks_of(monthly: &BTreeMap<String, Vec<MonthlyPoint>>) -> usize {
    monthly
        .values()
        .flat_map(|pts| pts.iter().map(|p| p.block_index + 1))
        .max()
        .unwrap_or(0)
}

struct Job {
    task: Task,
    model: ModelKind,
    window: usize,
    horizon: usize,
    /// `(shift, test_block)` in order; recurrent jobs carry every shift.
    shifts: Vec<(usize, usize)>,
}

fn plant_leak<T: Real>(split: &mut Split<T>, test_block: usize) {
    let row = if split.test.is_empty() {
        return;
    } else {
        split.test.window(0).to_vec()
    };
    let origin = SampleOrigin {
        repo_id: split.test.origins[0].repo_id.clone(),
        last_block: test_block,
    };
    split.train.push(&row, split.test.targets[0], split.test.horizons[0], origin);
}

fn run_job<T: Real>(
    spec: &GridSpec,
    monthly: &BTreeMap<String, Vec<MonthlyPoint>>,
    job: &Job,
    first_job: bool,
) -> (Vec<EvaluationRecord>, Vec<SkippedCell>, Option<EvalError>) {
    let rule = TargetRule::new(job.task, spec.epsilon);
    let space = LabelSpace::new(job.task, spec.slope_step);
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut warm: Option<TrainedModel<T>> = None;
    for (k, &(shift, test_block)) in job.shifts.iter().enumerate() {
        let key = CellKey {
            task: job.task,
            model: job.model,
            window: job.window,
            horizon: job.horizon,
            shift,
        };
        let cell_seed = key.seed(spec.base_seed);
        let mut split = make_split::<T>(monthly, &rule, job.window, job.horizon, test_block, spec.train_history);
        if spec.inject_leak && first_job && k == 0 {
            plant_leak(&mut split, test_block);
        }
        if !leakage_check(&split.train, test_block) || !leakage_check_inputs(&split.test, test_block) {
            return (records, skipped, Some(EvalError::Leakage(key)));
        }
        if split.train.is_empty() || split.test.is_empty() {
            skipped.push(SkippedCell {
                key,
                reason: format!(
                    "insufficient history: {} training and {} test samples",
                    split.train.len(),
                    split.test.len()
                ),
            });
            continue;
        }
        let config = spec.model_config(job.model, job.task, cell_seed);
        let trained = match (&warm, job.model) {
            (Some(prev), ModelKind::Lstm) => prev.incremental_update(&split.train),
            _ => models::train(&config, &split.train),
        };
        let model = match trained {
            Ok(m) => m,
            Err(source) => return (records, skipped, Some(EvalError::Model { cell: key, source })),
        };
        let predictions = match model.predict(&split.test) {
            Ok(p) => p,
            Err(source) => return (records, skipped, Some(EvalError::Model { cell: key, source })),
        };
        let pred: Vec<f64> = predictions.iter().map(|v| v.as_f64()).collect();
        let truth: Vec<f64> = split.test.targets.iter().map(|v| v.as_f64()).collect();
        let repos: Vec<String> = split.test.origins.iter().map(|o| o.repo_id.clone()).collect();
        let mut rec = match score_cell(key, &space, &pred, &truth, spec.keep_predictions.then_some(repos.as_slice())) {
            Ok(r) => r,
            Err(e) => return (records, skipped, Some(e)),
        };
        if rec.coarse_accuracy.is_some_and(|c| c < rec.accuracy) {
            return (records, skipped, Some(EvalError::CoarseningViolation(key)));
        }
        rec.test_block = test_block;
        rec.n_train = split.train.len();
        rec.seed = cell_seed;
        records.push(rec);
        if job.model == ModelKind::Lstm {
            warm = Some(model);
        }
    }
    (records, skipped, None)
}

/// Test windows must end before the test block as well.
fn leakage_check_inputs<T: Real>(samples: &SampleSet<T>, test_block: usize) -> bool {
    samples.origins.iter().all(|o| o.last_block < test_block)
}

/// Runs every planned cell. Cells without enough history are reported in
/// [`GridOutcome::skipped`]; leakage and model failures abort the run.
pub fn run_grid<T: Real>(
    spec: &GridSpec,
    monthly: &BTreeMap<String, Vec<MonthlyPoint>>,
) -> Result<GridOutcome, EvalError> {
    let problems = spec.problems();
    if !problems.is_empty() {
        return Err(EvalError::InvalidSpec(problems));
    }
    let n_blocks = n_blocks_of(monthly);
    let (planned, mut skipped) = plan_grid(spec, n_blocks);

    let mut groups: BTreeMap<(Task, ModelKind, usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for c in &planned {
        groups
            .entry((c.key.task, c.key.model, c.key.window, c.key.horizon))
            .or_default()
            .push((c.key.shift, c.test_block));
    }
    let mut jobs = Vec::new();
    for ((task, model, window, horizon), shifts) in groups {
        if model == ModelKind::Lstm {
            jobs.push(Job {
                task,
                model,
                window,
                horizon,
                shifts,
            });
        } else {
            jobs.extend(shifts.into_iter().map(|s| Job {
                task,
                model,
                window,
                horizon,
                shifts: vec![s],
            }));
        }
    }
    // long recurrent jobs first keeps the pool busy
    jobs.sort_by_key(|j| std::cmp::Reverse(j.shifts.len() * j.window));

    let first_key = planned.first().map(|c| (c.key.task, c.key.model, c.key.window, c.key.horizon, c.key.shift));
    let results: Vec<_> = jobs
        .par_iter()
        .map(|job| {
            let first = first_key == Some((job.task, job.model, job.window, job.horizon, job.shifts[0].0));
            run_job::<T>(spec, monthly, job, first)
        })
        .collect();

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (r, s, e) in results {
        records.extend(r);
        skipped.extend(s);
        errors.extend(e);
    }
    if !errors.is_empty() {
        // report the canonical first failure so the outcome is schedule independent
        errors.sort_by_key(|e| match e {
            EvalError::Leakage(k) | EvalError::CoarseningViolation(k) => Some(*k),
            EvalError::Model { cell, .. } => Some(*cell),
            _ => None,
        });
        return Err(errors.swap_remove(0));
    }
    records.sort_by_key(|r| r.key);
    skipped.sort_by_key(|s| s.key);
    // a cell with a model record but no baseline record cannot happen unless
    // the baseline was skipped alone
    let baselines: std::collections::BTreeSet<_> = records
        .iter()
        .filter(|r| r.key.model == ModelKind::Majority)
        .map(|r| (r.key.task, r.key.window, r.key.horizon, r.key.shift))
        .collect();
    for r in &records {
        assert!(
            baselines.contains(&(r.key.task, r.key.window, r.key.horizon, r.key.shift)),
            "missing baseline for {}",
            r.key
        );
    }
    Ok(GridOutcome {
        records,
        skipped,
        n_blocks,
        n_repos: monthly.len(),
    })
}

/// Quantile by linear interpolation between order statistics of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub task: Task,
    pub model: ModelKind,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
    pub n_cells: usize,
}

impl AggregateSummary {
    pub fn of(task: Task, model: ModelKind, values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        let q1 = quantile(&v, 0.25);
        let q3 = quantile(&v, 0.75);
        Self {
            task,
            model,
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(&v, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
            min: v[0],
            max: v[v.len() - 1],
            n_cells: v.len(),
        }
    }
}

/// Accuracy distribution per `(task, model)`.
pub fn aggregate(records: &[EvaluationRecord]) -> Vec<AggregateSummary> {
    aggregate_by(records, |r| Some(r.accuracy))
}

/// Distribution of any per-record metric per `(task, model)`; records where
/// `metric` is `None` are left out.
pub fn aggregate_by(records: &[EvaluationRecord], metric: impl Fn(&EvaluationRecord) -> Option<f64>) -> Vec<AggregateSummary> {
    let mut groups: BTreeMap<(Task, ModelKind), Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(v) = metric(r) {
            groups.entry((r.key.task, r.key.model)).or_default().push(v);
        }
    }
    groups
        .into_iter()
        .map(|((t, m), v)| AggregateSummary::of(t, m, &v))
        .collect()
}

/// Confusion counts summed over every cell of each `(task, model)`.
pub fn pooled_confusions(records: &[EvaluationRecord]) -> BTreeMap<(Task, ModelKind), Confusion> {
    let mut out: BTreeMap<(Task, ModelKind), Confusion> = BTreeMap::new();
    for r in records {
        out.entry((r.key.task, r.key.model))
            .and_modify(|c| c.add(&r.confusion))
            .or_insert_with(|| r.confusion.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert!((accuracy(&[1, 2, 3], &[1, 2, 4]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(accuracy(&[1, 2], &[1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0], &[0, 1]), Err(EvalError::LengthMismatch(1, 2)));
    }

    #[test]
    fn confusion_examples() {
        let c = confusion_matrix(&[1, 1], &[1, 2], &[0, 1, 2]).unwrap();
        assert_eq!(c.counts, vec![vec![0, 0, 0], vec![0, 1, 0], vec![0, 1, 0]]);
        assert_eq!(c.trace(), 1);
        assert_eq!(c.row_normalized()[2], vec![0.0, 1.0, 0.0]);
        let d = confusion_matrix(&[0, 1, 2], &[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!(d.trace(), 3);
        assert_eq!(d.macro_f1(), 1.0);
        assert_eq!(confusion_matrix(&[0], &[0], &[]), Err(EvalError::UnknownLabel(0)));
    }

    #[test]
    fn baseline_examples() {
        let raw = LabelSpace::new(Task::Raw, 1.0);
        assert_eq!(majority_baseline_cell(&raw, &[0.0, 0.0, 10.0], &[0.0, 0.0]).unwrap().accuracy, 1.0);
        let b = LabelSpace::new(Task::Bucket, 1.0);
        assert_eq!(majority_baseline_cell(&b, &[0.0, 2.0], &[2.0]).unwrap().accuracy, 0.0);
        let t = LabelSpace::new(Task::TrendType, 1.0);
        assert_eq!(majority_baseline_cell(&t, &[1.0; 4], &[1.0; 3]).unwrap().accuracy, 1.0);
    }

    #[test]
    fn quartiles_by_interpolation() {
        let s = AggregateSummary::of(Task::Raw, ModelKind::Lstm, &[0.4, 0.1, 0.3, 0.2]);
        assert!((s.q1 - 0.175).abs() < 1e-12);
        assert!((s.q3 - 0.325).abs() < 1e-12);
        assert!((s.iqr - 0.15).abs() < 1e-12);
        assert!((s.mean - 0.25).abs() < 1e-12);
        let one = AggregateSummary::of(Task::Raw, ModelKind::Lstm, &[0.8]);
        assert_eq!((one.mean, one.iqr), (0.8, 0.0));
        assert_eq!(AggregateSummary::of(Task::Raw, ModelKind::Lstm, &[0.0, 1.0]).mean, 0.5);
    }

    #[test]
    fn r2_constant_truth() {
        assert_eq!(r_squared(&[1.0, 1.0], &[1.0, 1.0]), 1.0);
        assert_eq!(r_squared(&[1.0, 2.0], &[1.0, 1.0]), 0.0);
        assert!((r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_grid_plan_size() {
        let spec = GridSpec::default();
        let (planned, skipped) = plan_grid(&spec, 36);
        assert!(skipped.is_empty());
        // 3 models plus the baseline, 4 tasks, 10 x 6 x 12 cells each
        assert_eq!(planned.len(), 4 * 4 * 720);
        let (_, skipped) = plan_grid(&spec, 4);
        assert_eq!(skipped.len(), 4 * 4 * 720);
    }
}
