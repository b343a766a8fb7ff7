//! Crate-level error with the process exit category of each failure.

use std::path::PathBuf;

use crate::analytics::AnalyticsError;
use crate::depgraph::DepGraphError;
use crate::eval::EvalError;
use crate::features::FeatureError;
use crate::ingest::IngestError;
use crate::models::ModelError;
use crate::scorecard::ScoreError;
use crate::synth::SynthError;
use crate::targets::TargetError;

/// Process exit status categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Data = 2,
    Internal = 3,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Graph(#[from] DepGraphError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    NoData(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Error::Config(_) => ExitCode::Usage,
            Error::Eval(e) => match e {
                EvalError::InvalidSpec(_) => ExitCode::Usage,
                EvalError::Leakage(_) | EvalError::CoarseningViolation(_) => ExitCode::Internal,
                EvalError::Model { source, .. } => model_exit(source),
                _ => ExitCode::Data,
            },
            Error::Model(e) => model_exit(e),
            _ => ExitCode::Data,
        }
    }

    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Ingest(_) => "ingest",
            Error::Score(_) => "scorecard",
            Error::Graph(_) => "depgraph",
            Error::Analytics(_) => "analytics",
            Error::Target(_) => "targets",
            Error::Feature(_) => "features",
            Error::Model(_) => "models",
            Error::Eval(EvalError::Leakage(_)) => "leakage",
            Error::Eval(_) => "eval",
            Error::Synth(_) => "synth",
            Error::NoData(_) => "data",
            Error::Output { .. } => "output",
        }
    }
}

fn model_exit(e: &ModelError) -> ExitCode {
    match e {
        ModelError::NumericalFailure(_) | ModelError::ShapeMismatch { .. } | ModelError::KindMismatch { .. } => {
            ExitCode::Internal
        }
        ModelError::InvalidConfig(_) => ExitCode::Usage,
        _ => ExitCode::Data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::CellKey;
    use crate::models::ModelKind;
    use crate::targets::Task;

    #[test]
    fn categories() {
        let key = CellKey {
            task: Task::Raw,
            model: ModelKind::Lstm,
            window: 3,
            horizon: 1,
            shift: 0,
        };
        assert_eq!(Error::Eval(EvalError::Leakage(key)).exit_code(), ExitCode::Internal);
        assert_eq!(Error::Config(vec!["x".into()]).exit_code(), ExitCode::Usage);
        assert_eq!(Error::Ingest(IngestError::MalformedRecord(3)).exit_code(), ExitCode::Data);
        assert_eq!(ExitCode::Internal.code(), 3);
    }
}
