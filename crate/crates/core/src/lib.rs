//! Reconstruction of daily Maintained scores from repository activity, and a
//! forecasting toolkit that predicts future maintenance levels.
//!
//! The pipeline runs ingest → scorecard → depgraph selection → monthly
//! targets → windowed features → models → evaluation grid. Numeric stages are
//! generic over [`Real`]; the aliases below fix them to `f64` or `f32`.

pub mod analytics;
pub mod config;
pub mod depgraph;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod linalg;
pub mod models;
pub mod period;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod scorecard;
pub mod seed;
pub mod synth;
pub mod targets;

pub use error::{Error, ExitCode};
pub use period::Period;
pub use scalar::Real;

pub type Samples = features::SampleSet<f64>;
pub type Model = models::TrainedModel<f64>;
pub type Graph = depgraph::DependencyGraph<f64>;
pub type Selection = depgraph::SelectionResult<f64>;

pub type SamplesF32 = features::SampleSet<f32>;
pub type ModelF32 = models::TrainedModel<f32>;
pub type GraphF32 = depgraph::DependencyGraph<f32>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
