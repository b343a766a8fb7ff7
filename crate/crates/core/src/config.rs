//! Run configuration: one TOML file with `[paths]`, `[period]`,
//! `[selection]`, `[grid]`, `[flags]` and `[synth]` sections.
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::GridSpec;
use crate::models::{Aggregation, ModelKind};
use crate::period::Period;
use crate::scorecard::ScoreParams;
use crate::targets::{BlockScheme, Task};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub events: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub dependencies: Option<PathBuf>,
    /// Library-to-repository map; optional.
    pub library_map: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodConfig {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Default for PeriodConfig {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid"),
            end: NaiveDate::from_ymd_opt(2023, 12, 31).expect("valid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub fraction: f64,
    /// Restrict later stages to the selected repositories.
    pub apply: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            fraction: 0.1,
            apply: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub tasks: Vec<String>,
    pub models: Vec<String>,
    pub windows: Vec<usize>,
    pub horizons: Vec<usize>,
    pub shifts: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub slope_step: f64,
    pub ridge_lambda: f64,
    pub forest_trees: usize,
    pub lstm_max_epochs: usize,
    pub train_history: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            tasks: g.tasks.iter().map(|t| t.name().to_string()).collect(),
            models: g.models.iter().map(|m| m.name().to_string()).collect(),
            windows: g.windows,
            horizons: g.horizons,
            shifts: g.shifts,
            seed: g.base_seed,
            epsilon: g.epsilon,
            slope_step: g.slope_step,
            ridge_lambda: g.ridge_lambda,
            forest_trees: g.forest.n_trees,
            lstm_max_epochs: g.lstm.max_epochs,
            train_history: g.train_history,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    pub gate_boundary_inclusive: bool,
    pub calendar_months: bool,
    pub forest_median: bool,
    pub reverse_pagerank_edges: bool,
    /// Drop repositories whose monthly score is 0 or 10 throughout.
    pub filter_extremes: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Self {
            gate_boundary_inclusive: true,
            calendar_months: false,
            forest_median: false,
            reverse_pagerank_edges: false,
            filter_extremes: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// `mix` for persistent/decaying/bursty repositories, `preset` for every regime.
    pub preset: String,
    pub persistent: usize,
    pub decaying: usize,
    pub bursty: usize,
    /// Repository count of the `preset` mix.
    pub repos: usize,
    pub seed: u64,
    pub created_on: NaiveDate,
    pub end: NaiveDate,
    /// Dependency edges drawn per synthetic library.
    pub edges_per_library: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            preset: "mix".into(),
            persistent: 120,
            decaying: 40,
            bursty: 40,
            repos: 60,
            seed: 1,
            created_on: NaiveDate::from_ymd_opt(2020, 6, 1).expect("valid"),
            end: NaiveDate::from_ymd_opt(2023, 12, 31).expect("valid"),
            edges_per_library: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub period: PeriodConfig,
    pub selection: SelectionConfig,
    pub grid: GridConfig,
    pub flags: Flags,
    pub synth: SynthConfig,
}

/// A parsed configuration and where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    /// Hex SHA-256 of the file bytes.
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| format!("config {} is not UTF-8", path.display()))?;
    let config = parse_config(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig {
        config,
        base_dir,
        sha256: sha256_hex(&bytes),
    })
}

impl LoadedConfig {
    pub fn from_config(config: RunConfig, base_dir: PathBuf) -> Self {
        let text = toml::to_string(&config).expect("config serializes");
        Self {
            sha256: sha256_hex(text.as_bytes()),
            config,
            base_dir,
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn path(&self, which: &Option<PathBuf>) -> Option<PathBuf> {
        which.as_deref().map(|p| self.resolve(p))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.path(&self.config.paths.output).unwrap_or_else(|| self.resolve(Path::new("out")))
    }
}

impl RunConfig {
    pub fn period(&self) -> Option<Period> {
        Period::new(self.period.start, self.period.end)
    }

    pub fn score_params(&self) -> ScoreParams {
        ScoreParams {
            gate_boundary_inclusive: self.flags.gate_boundary_inclusive,
            ..ScoreParams::default()
        }
    }

    pub fn block_scheme(&self) -> BlockScheme {
        if self.flags.calendar_months {
            BlockScheme::CalendarMonth
        } else {
            BlockScheme::Fixed30
        }
    }

    /// Grid specification, or the list of problems with the grid section.
    pub fn grid_spec(&self) -> Result<GridSpec, Vec<String>> {
        let mut problems = Vec::new();
        let tasks: Vec<Task> = self
            .grid
            .tasks
            .iter()
            .filter_map(|t| {
                let parsed = Task::parse(t.trim());
                if parsed.is_none() {
                    problems.push(format!("unknown task {t:?}"));
                }
                parsed
            })
            .collect();
        let models: Vec<ModelKind> = self
            .grid
            .models
            .iter()
            .filter_map(|m| {
                let parsed = ModelKind::parse(m);
                if parsed.is_none() {
                    problems.push(format!("unknown model {m:?}"));
                }
                parsed
            })
            .collect();
        let mut spec = GridSpec {
            tasks,
            models,
            windows: self.grid.windows.clone(),
            horizons: self.grid.horizons.clone(),
            shifts: self.grid.shifts,
            base_seed: self.grid.seed,
            epsilon: self.grid.epsilon,
            slope_step: self.grid.slope_step,
            ridge_lambda: self.grid.ridge_lambda,
            train_history: self.grid.train_history,
            ..GridSpec::default()
        };
        spec.forest.n_trees = self.grid.forest_trees;
        if self.flags.forest_median {
            spec.forest.aggregation = Aggregation::Median;
        }
        spec.lstm.max_epochs = self.grid.lstm_max_epochs;
        problems.extend(spec.problems());
        if problems.is_empty() {
            Ok(spec)
        } else {
            Err(problems)
        }
    }
}

/// Range problems, independent of the file system.
pub fn validate_ranges(config: &RunConfig) -> Vec<String> {
    let mut out = Vec::new();
    if config.period().is_none() {
        out.push(format!(
            "period end {} is before start {}",
            config.period.end, config.period.start
        ));
    }
    let f = config.selection.fraction;
    if !(f > 0.0 && f <= 1.0) {
        out.push(format!("selection fraction {f} outside (0, 1]"));
    }
    if let Err(p) = config.grid_spec() {
        out.extend(p);
    }
    let s = &config.synth;
    if !matches!(s.preset.as_str(), "mix" | "preset") {
        out.push(format!("unknown synth preset {:?}", s.preset));
    }
    if s.end < s.created_on {
        out.push("synth end is before its creation date".into());
    }
    out
}

/// Every problem with the configuration: value ranges plus configured input
/// files that do not exist.
pub fn validate_config(loaded: &LoadedConfig) -> Vec<String> {
    let mut out = validate_ranges(&loaded.config);
    let p = &loaded.config.paths;
    for (name, path) in [
        ("events", &p.events),
        ("metadata", &p.metadata),
        ("dependencies", &p.dependencies),
        ("library_map", &p.library_map),
    ] {
        if let Some(resolved) = loaded.path(path) {
            if !resolved.is_file() {
                out.push(format!("{name} file {} does not exist", resolved.display()));
            }
        }
    }
    out
}
