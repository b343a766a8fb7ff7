//! Forecasters behind one train/predict contract.
//!
//! Classification tasks are fitted as regressions on their integer codes and
//! mapped back to labels by [`crate::eval::discretize`].

pub mod forest;
pub mod lstm;
pub mod majority;
pub mod ridge;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::eval::labels::LabelSpace;
use crate::features::{expanded_table, flatten_samples, SampleSet, Standardizer};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::seed;
use crate::targets::Task;

pub use forest::{Aggregation, ForestParams, RandomForest};
pub use lstm::{lstm_gradient_check, GradCheckDims, LstmParams};
pub use majority::{modal_label, MajorityModel};
pub use ridge::RidgeModel;

pub const MODEL_FORMAT: &str = "maintcast-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Majority,
    VarmaStat,
    RandomForest,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Majority,
        ModelKind::VarmaStat,
        ModelKind::RandomForest,
        ModelKind::Lstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Majority => "majority",
            ModelKind::VarmaStat => "varma",
            ModelKind::RandomForest => "forest",
            ModelKind::Lstm => "lstm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|k| k.name() == s).or(match s.as_str() {
            "baseline" => Some(ModelKind::Majority),
            "varmastat" | "ridge" => Some(ModelKind::VarmaStat),
            "randomforest" | "rf" => Some(ModelKind::RandomForest),
            _ => None,
        })
    }

    pub fn index(self) -> u64 {
        self as u64
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("ridge normal equations are singular at lambda {0}")]
    SingularSystem(f64),
    #[error("sample shape (t={got_t}, f={got_f}, task {got_task}) does not match the model (t={t}, f={f}, task {task})")]
    ShapeMismatch {
        t: usize,
        f: usize,
        task: &'static str,
        got_t: usize,
        got_f: usize,
        got_task: &'static str,
    },
    #[error("operation needs a {expected} model, got {got}")]
    KindMismatch { expected: &'static str, got: &'static str },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    NumericalFailure(#[from] lstm::NonFinite),
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub seed: u64,
    pub task: Task,
    /// Label grid for slopes, used by the majority model.
    pub slope_step: f64,
    pub ridge_lambda: f64,
    pub forest: ForestParams,
    pub lstm: LstmParams,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, task: Task, seed: u64) -> Self {
        Self {
            kind,
            seed,
            task,
            slope_step: 1.0,
            ridge_lambda: 1.0,
            forest: ForestParams::default(),
            lstm: LstmParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |s: String| Err(ModelError::InvalidConfig(s));
        if !(self.slope_step > 0.0 && self.slope_step.is_finite()) {
            return bad(format!("slope step {} must be positive", self.slope_step));
        }
        match self.kind {
            ModelKind::Majority => {}
            ModelKind::VarmaStat => {
                if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
                    return bad(format!("ridge lambda {} must be non-negative", self.ridge_lambda));
                }
            }
            ModelKind::RandomForest => {
                if self.forest.n_trees == 0 {
                    return bad("forest needs at least one tree".into());
                }
                if self.forest.max_depth == Some(0) {
                    return bad("forest depth limit must be positive".into());
                }
            }
            ModelKind::Lstm => self.lstm.validate().map_err(ModelError::InvalidConfig)?,
        }
        Ok(())
    }

    fn label_space(&self) -> LabelSpace {
        LabelSpace::new(self.task, self.slope_step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub n_samples: usize,
    pub window_t: usize,
    pub n_features: usize,
    /// Horizon of the first training sample; grids train one horizon at a time.
    pub horizon_h: usize,
    pub task: Task,
    pub updates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LstmState<T> {
    pub net: lstm::LstmNet<T>,
    pub adam: lstm::AdamState<T>,
    pub target_mean: T,
    pub target_scale: T,
    pub last_fit: Option<lstm::FitReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub enum Learned<T> {
    Majority(MajorityModel),
    VarmaStat(RidgeModel<T>),
    RandomForest(RandomForest<T>),
    Lstm(LstmState<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrainedModel<T> {
    pub config: ModelConfig,
    /// Input standardization fitted on the first training set.
    pub standardizer: Standardizer<T>,
    pub meta: TrainingMeta,
    pub learned: Learned<T>,
}

fn clip_range(task: Task) -> (f64, f64) {
    match task {
        Task::Raw => (0.0, 10.0),
        Task::Bucket | Task::TrendType => (0.0, 2.0),
        Task::Slope => (-10.0, 10.0),
    }
}

/// Each time step of each window as one row of `f` features.
fn step_table<T: Real>(samples: &SampleSet<T>) -> Matrix<T> {
    Matrix::from_vec(samples.len() * samples.window_t, samples.n_features, samples.inputs.clone())
}

fn lstm_inputs<T: Real>(samples: &SampleSet<T>, std: &Standardizer<T>) -> Vec<Vec<T>> {
    let f = samples.n_features;
    (0..samples.len())
        .map(|i| {
            let mut w = samples.window(i).to_vec();
            for step in w.chunks_mut(f) {
                std.apply_row(step);
            }
            w
        })
        .collect()
}

fn lstm_targets<T: Real>(samples: &SampleSet<T>, mean: T, scale: T) -> Vec<T> {
    let (lo, hi) = clip_range(samples.task);
    samples
        .targets
        .iter()
        .map(|&y| (y.max(T::of(lo)).min(T::of(hi)) - mean) / scale)
        .collect()
}

pub fn train<T: Real>(config: &ModelConfig, samples: &SampleSet<T>) -> Result<TrainedModel<T>, ModelError> {
    config.validate()?;
    if samples.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if samples.task != config.task {
        return Err(ModelError::ShapeMismatch {
            t: samples.window_t,
            f: samples.n_features,
            task: config.task.name(),
            got_t: samples.window_t,
            got_f: samples.n_features,
            got_task: samples.task.name(),
        });
    }
    let meta = TrainingMeta {
        n_samples: samples.len(),
        window_t: samples.window_t,
        n_features: samples.n_features,
        horizon_h: samples.horizons[0],
        task: samples.task,
        updates: 0,
    };
    let (standardizer, learned) = match config.kind {
        ModelKind::Majority => {
            let space = config.label_space();
            let codes: Vec<i64> = samples.targets.iter().map(|y| space.discretize(y.as_f64())).collect();
            let code = modal_label(&codes).expect("non-empty");
            (
                Standardizer::identity(0),
                Learned::Majority(MajorityModel {
                    code,
                    value: space.value(code),
                }),
            )
        }
        ModelKind::VarmaStat => {
            let table = expanded_table(samples);
            let std = Standardizer::fit(&table);
            let x = std.apply(&table);
            let model = ridge::fit_ridge(&x, &samples.targets, T::of(config.ridge_lambda))
                .ok_or(ModelError::SingularSystem(config.ridge_lambda))?;
            (std, Learned::VarmaStat(model))
        }
        ModelKind::RandomForest => {
            let table = flatten_samples(samples);
            let std = Standardizer::fit(&table);
            let x = std.apply(&table);
            let forest = forest::fit_forest(&x, &samples.targets, &config.forest, seed::derive(config.seed, &[1]));
            (std, Learned::RandomForest(forest))
        }
        ModelKind::Lstm => {
            let std = Standardizer::fit(&step_table(samples));
            let (lo, hi) = clip_range(samples.task);
            let clipped: Vec<T> = samples.targets.iter().map(|&y| y.max(T::of(lo)).min(T::of(hi))).collect();
            let n = T::of_usize(clipped.len());
            let mean = clipped.iter().copied().sum::<T>() / n;
            let sd = (clipped.iter().map(|&y| (y - mean) * (y - mean)).sum::<T>() / n).sqrt();
            let scale = if sd > T::of(1e-9) { sd } else { T::one() };
            let mut net = lstm::LstmNet::init(samples.n_features, &config.lstm, seed::derive(config.seed, &[2]));
            let mut adam = lstm::AdamState::new(net.n_params());
            let inputs = lstm_inputs(samples, &std);
            let windows: Vec<&[T]> = inputs.iter().map(|w| w.as_slice()).collect();
            let targets = lstm_targets(samples, mean, scale);
            let report = lstm::fit(&mut net, &mut adam, &windows, &targets, &config.lstm, seed::derive(config.seed, &[3, 0]))?;
            (
                std,
                Learned::Lstm(LstmState {
                    net,
                    adam,
                    target_mean: mean,
                    target_scale: scale,
                    last_fit: Some(report),
                }),
            )
        }
    };
    Ok(TrainedModel {
        config: config.clone(),
        standardizer,
        meta,
        learned,
    })
}

impl<T: Real> TrainedModel<T> {
    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    fn check_shape(&self, samples: &SampleSet<T>) -> Result<(), ModelError> {
        let m = &self.meta;
        if samples.window_t != m.window_t || samples.n_features != m.n_features || samples.task != m.task {
            return Err(ModelError::ShapeMismatch {
                t: m.window_t,
                f: m.n_features,
                task: m.task.name(),
                got_t: samples.window_t,
                got_f: samples.n_features,
                got_task: samples.task.name(),
            });
        }
        Ok(())
    }

    /// Unclipped predictions in task units, one per sample.
    pub fn predict(&self, samples: &SampleSet<T>) -> Result<Vec<T>, ModelError> {
        self.check_shape(samples)?;
        if samples.is_empty() {
            return Ok(Vec::new());
        }
        Ok(match &self.learned {
            Learned::Majority(m) => vec![T::of(m.value); samples.len()],
            Learned::VarmaStat(r) => {
                let x = self.standardizer.apply(&expanded_table(samples));
                (0..x.rows).map(|i| r.predict_row(x.row(i))).collect()
            }
            Learned::RandomForest(f) => {
                let x = self.standardizer.apply(&flatten_samples(samples));
                (0..x.rows).map(|i| f.predict_row(x.row(i))).collect()
            }
            Learned::Lstm(s) => lstm_inputs(samples, &self.standardizer)
                .iter()
                .map(|w| s.net.predict(w) * s.target_scale + s.target_mean)
                .collect(),
        })
    }

    /// Mean squared error of the network on `samples` in its standardized
    /// target units; `None` for non-recurrent models.
    pub fn lstm_loss(&self, samples: &SampleSet<T>) -> Option<T> {
        let Learned::Lstm(s) = &self.learned else {
            return None;
        };
        let inputs = lstm_inputs(samples, &self.standardizer);
        let windows: Vec<&[T]> = inputs.iter().map(|w| w.as_slice()).collect();
        Some(s.net.loss(&windows, &lstm_targets(samples, s.target_mean, s.target_scale)))
    }

    /// Continues training a recurrent model on new samples from its current
    /// weights and optimizer state, with a fresh early-stopping state. The
    /// input and target standardization of the first fit is kept.
    pub fn incremental_update(&self, samples: &SampleSet<T>) -> Result<TrainedModel<T>, ModelError> {
        let Learned::Lstm(state) = &self.learned else {
            return Err(ModelError::KindMismatch {
                expected: ModelKind::Lstm.name(),
                got: self.kind().name(),
            });
        };
        if samples.is_empty() {
            return Ok(self.clone());
        }
        self.check_shape(samples)?;
        let mut next = state.clone();
        let inputs = lstm_inputs(samples, &self.standardizer);
        let windows: Vec<&[T]> = inputs.iter().map(|w| w.as_slice()).collect();
        let targets = lstm_targets(samples, state.target_mean, state.target_scale);
        let round = self.meta.updates + 1;
        let report = lstm::fit(
            &mut next.net,
            &mut next.adam,
            &windows,
            &targets,
            &self.config.lstm,
            seed::derive(self.config.seed, &[3, round]),
        )?;
        next.last_fit = Some(report);
        let mut meta = self.meta.clone();
        meta.n_samples = samples.len();
        meta.updates = round;
        Ok(TrainedModel {
            config: self.config.clone(),
            standardizer: self.standardizer.clone(),
            meta,
            learned: Learned::Lstm(next),
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct Envelope<T> {
    format: String,
    version: u32,
    scalar: String,
    model: TrainedModel<T>,
}

fn scalar_name<T: Real>() -> String {
    std::any::type_name::<T>().to_string()
}

pub fn save_model<T: Real, W: Write>(model: &TrainedModel<T>, out: W) -> Result<(), ModelError> {
    let env = Envelope {
        format: MODEL_FORMAT.into(),
        version: MODEL_FORMAT_VERSION,
        scalar: scalar_name::<T>(),
        model: model.clone(),
    };
    serde_json::to_writer(out, &env).map_err(|e| ModelError::Format(e.to_string()))
}

pub fn load_model<T: Real, R: Read>(input: R) -> Result<TrainedModel<T>, ModelError> {
    let env: Envelope<T> = serde_json::from_reader(input).map_err(|e| ModelError::Format(e.to_string()))?;
    if env.format != MODEL_FORMAT {
        return Err(ModelError::Format(format!("unexpected format tag {:?}", env.format)));
    }
    if env.version != MODEL_FORMAT_VERSION {
        return Err(ModelError::Format(format!("unsupported version {}", env.version)));
    }
    if env.scalar != scalar_name::<T>() {
        return Err(ModelError::Format(format!("stored scalar {} does not match {}", env.scalar, scalar_name::<T>())));
    }
    Ok(env.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SampleOrigin;

    fn samples(task: Task, rows: &[(Vec<f64>, f64)], t: usize, f: usize) -> SampleSet<f64> {
        let mut s = SampleSet::empty(task, t, f);
        for (i, (w, y)) in rows.iter().enumerate() {
            s.push(
                w,
                *y,
                1,
                SampleOrigin {
                    repo_id: format!("r{i}"),
                    last_block: t - 1,
                },
            );
        }
        s
    }

    #[test]
    fn majority_predicts_modal_code() {
        let s = samples(
            Task::Bucket,
            &[(vec![0.0; 3], 0.0), (vec![1.0; 3], 0.0), (vec![2.0; 3], 2.0)],
            3,
            1,
        );
        let m = train(&ModelConfig::new(ModelKind::Majority, Task::Bucket, 1), &s).unwrap();
        assert_eq!(m.predict(&s).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn ridge_recovers_linear_target() {
        let rows: Vec<(Vec<f64>, f64)> = (0..40)
            .map(|i| {
                let a = (i as f64 * 0.37).sin() * 4.0 + 5.0;
                let b = (i as f64 * 0.11).cos();
                let c = (i as f64 * 0.7).sin() * 2.0;
                (vec![b, c, a], 2.0 * a)
            })
            .collect();
        let s = samples(Task::Raw, &rows, 3, 1);
        let mut cfg = ModelConfig::new(ModelKind::VarmaStat, Task::Raw, 1);
        cfg.ridge_lambda = 1e-8;
        let m = train(&cfg, &s).unwrap();
        let p = m.predict(&s).unwrap();
        let err = p.iter().zip(&s.targets).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn zero_lambda_on_degenerate_design_is_singular() {
        let rows: Vec<(Vec<f64>, f64)> = (0..3).map(|i| (vec![i as f64; 3], i as f64)).collect();
        let s = samples(Task::Raw, &rows, 3, 1);
        let mut cfg = ModelConfig::new(ModelKind::VarmaStat, Task::Raw, 1);
        cfg.ridge_lambda = 0.0;
        assert!(matches!(train(&cfg, &s), Err(ModelError::SingularSystem(_))));
    }

    #[test]
    fn shape_and_kind_errors() {
        let s = samples(Task::Raw, &[(vec![1.0; 3], 1.0)], 3, 1);
        let m = train(&ModelConfig::new(ModelKind::Majority, Task::Raw, 1), &s).unwrap();
        let other = samples(Task::Raw, &[(vec![1.0; 4], 1.0)], 4, 1);
        assert!(matches!(m.predict(&other), Err(ModelError::ShapeMismatch { .. })));
        assert!(matches!(m.incremental_update(&s), Err(ModelError::KindMismatch { .. })));
        let empty = SampleSet::<f64>::empty(Task::Raw, 3, 1);
        assert_eq!(
            train(&ModelConfig::new(ModelKind::Majority, Task::Raw, 1), &empty),
            Err(ModelError::EmptyTrainingSet)
        );
    }

    #[test]
    fn save_load_round_trip() {
        let rows: Vec<(Vec<f64>, f64)> = (0..30).map(|i| (vec![(i % 7) as f64 * 0.3; 6], (i % 7) as f64)).collect();
        let s = samples(Task::Raw, &rows, 3, 2);
        for kind in ModelKind::ALL {
            let mut cfg = ModelConfig::new(kind, Task::Raw, 4);
            cfg.forest.n_trees = 5;
            cfg.lstm.max_epochs = 2;
            let m = train(&cfg, &s).unwrap();
            let mut buf = Vec::new();
            save_model(&m, &mut buf).unwrap();
            let back: TrainedModel<f64> = load_model(buf.as_slice()).unwrap();
            assert_eq!(back, m, "{kind:?}");
            assert!(load_model::<f32, _>(buf.as_slice()).is_err());
        }
    }
}
