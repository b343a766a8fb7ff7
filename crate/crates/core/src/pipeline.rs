//! Pipeline stages driven by a loaded configuration, and the files each writes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::Datelike;

use crate::analytics::{self, IntervalStats, StabilityStats};
use crate::config::LoadedConfig;
use crate::depgraph::{self, PageRankParams, SelectionResult};
use crate::error::Error;
use crate::eval::{self, EvaluationRecord, GridOutcome, LabelSpace};
use crate::ingest::{self, Corpus, DependencySnapshot};
use crate::period::Period;
use crate::report::{self, Provenance};
use crate::scorecard::{self, RepoScores};
use crate::synth;
use crate::targets::{self, MonthlyPoint};

pub const SCORES_FILE: &str = "scores.csv";
pub const SELECTION_FILE: &str = "selection.csv";
pub const INTERVALS_FILE: &str = "intervals.csv";
pub const STABILITY_FILE: &str = "stability.csv";
pub const TARGETS_FILE: &str = "targets.csv";
pub const RECORDS_FILE: &str = "records.csv";
pub const OUTCOME_FILE: &str = "evaluation.json";
pub const SUMMARY_FILE: &str = "summary.csv";

fn required(cfg: &LoadedConfig, which: &Option<PathBuf>, name: &str) -> Result<PathBuf, Error> {
    cfg.path(which)
        .ok_or_else(|| Error::Config(vec![format!("paths.{name} is not set")]))
}

fn period(cfg: &LoadedConfig) -> Result<Period, Error> {
    cfg.config.period().ok_or_else(|| {
        Error::Config(vec![format!(
            "period end {} is before start {}",
            cfg.config.period.end, cfg.config.period.start
        )])
    })
}

pub fn provenance(cfg: &LoadedConfig) -> Provenance {
    Provenance::new(cfg.sha256.clone())
}

/// Events and metadata clipped to the configured period.
pub fn load_corpus(cfg: &LoadedConfig) -> Result<Corpus, Error> {
    let p = &cfg.config.paths;
    let events = ingest::read_event_log(required(cfg, &p.events, "events")?)?;
    let meta = ingest::read_repo_metadata(required(cfg, &p.metadata, "metadata")?)?;
    Ok(Corpus::assemble(meta, events, period(cfg)?)?)
}

pub fn load_dependencies(cfg: &LoadedConfig) -> Result<DependencySnapshot, Error> {
    let p = &cfg.config.paths;
    let edges = required(cfg, &p.dependencies, "dependencies")?;
    let map = cfg.path(&p.library_map);
    Ok(ingest::read_dependency_snapshot(edges, map.as_deref())?)
}

/// PageRank over the dependency snapshot and the top-fraction selection.
pub fn rank(cfg: &LoadedConfig) -> Result<SelectionResult<f64>, Error> {
    let snap = load_dependencies(cfg)?;
    let graph = depgraph::build_dependency_graph::<f64>(&snap, cfg.config.flags.reverse_pagerank_edges);
    let outcome = depgraph::pagerank(graph, &PageRankParams::default())?;
    if !outcome.converged {
        log::warn!("pagerank stopped after {} iterations without converging", outcome.iterations);
    }
    Ok(depgraph::select_top_fraction(&outcome.graph, &snap, cfg.config.selection.fraction)?)
}

/// The corpus later stages work on: everything, or only the selected
/// repositories when `selection.apply` is set.
pub fn working_corpus(cfg: &LoadedConfig) -> Result<Corpus, Error> {
    let mut corpus = load_corpus(cfg)?;
    if cfg.config.selection.apply {
        let sel = rank(cfg)?;
        let keep: BTreeSet<&str> = sel.repositories().into_iter().collect();
        corpus.repos.retain(|id, _| keep.contains(id.as_str()));
    }
    if corpus.repos.is_empty() {
        return Err(Error::NoData("no repositories to process".into()));
    }
    Ok(corpus)
}

pub fn reconstruct(cfg: &LoadedConfig, corpus: &Corpus) -> Result<BTreeMap<String, RepoScores>, Error> {
    Ok(scorecard::reconstruct_corpus(corpus, &cfg.config.score_params())?)
}

/// Monthly points per repository with the constant-extreme filter applied when
/// configured; also returns how many repositories it removed.
pub fn monthly(
    cfg: &LoadedConfig,
    scores: &BTreeMap<String, RepoScores>,
) -> Result<(BTreeMap<String, Vec<MonthlyPoint>>, usize), Error> {
    let all = targets::corpus_monthly(scores, cfg.config.block_scheme())?;
    if cfg.config.flags.filter_extremes {
        Ok(targets::filter_monthly_extremes(all))
    } else {
        Ok((all, 0))
    }
}

pub fn analyze(cfg: &LoadedConfig, corpus: &Corpus) -> Result<(Vec<IntervalStats>, Vec<StabilityStats>), Error> {
    let p = period(cfg)?;
    let mut intervals = Vec::new();
    let mut stability = Vec::new();
    for year in p.start.year()..=p.end.year() {
        intervals.push(analytics::mean_interactivity_days(corpus, year));
        stability.push(analytics::contributor_stability(corpus, year)?);
    }
    Ok((intervals, stability))
}

pub fn evaluate(
    cfg: &LoadedConfig,
    monthly: &BTreeMap<String, Vec<MonthlyPoint>>,
    inject_leak: bool,
) -> Result<GridOutcome, Error> {
    let mut spec = cfg.config.grid_spec().map_err(Error::Config)?;
    spec.inject_leak = inject_leak;
    if monthly.is_empty() {
        return Err(Error::NoData("no repositories left after filtering".into()));
    }
    Ok(eval::run_grid::<f64>(&spec, monthly)?)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Error> {
    let path = dir.join(name);
    report::write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

pub fn write_outcome(dir: &Path, outcome: &GridOutcome, prov: &Provenance) -> Result<Vec<PathBuf>, Error> {
    let json = serde_json::to_string(outcome).expect("outcome serializes");
    Ok(vec![
        write_text(dir, RECORDS_FILE, &report::records_csv(&outcome.records, prov))?,
        write_text(dir, OUTCOME_FILE, &(json + "\n"))?,
    ])
}

pub fn read_outcome(path: &Path) -> Result<GridOutcome, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        Error::Ingest(ingest::IngestError::Io {
            path: path.to_path_buf(),
            source,
        })
    })?;
    serde_json::from_str(&text).map_err(|e| Error::NoData(format!("{}: {e}", path.display())))
}

/// Summary statistics, pooled confusion matrices and, optionally, SVG plots.
pub fn write_report(
    dir: &Path,
    records: &[EvaluationRecord],
    slope_step: f64,
    plots: bool,
    prov: &Provenance,
) -> Result<Vec<PathBuf>, Error> {
    let summaries = eval::aggregate(records);
    let mut written = vec![write_text(dir, SUMMARY_FILE, &report::summary_csv(&summaries, prov))?];
    for ((task, model), c) in eval::pooled_confusions(records) {
        let space = LabelSpace::new(task, slope_step);
        for normalized in [false, true] {
            let name = report::confusion_file_name(task, model, normalized);
            written.push(write_text(dir, &name, &report::confusion_csv(&c, &space, normalized, prov))?);
        }
        if plots {
            let name = format!("confusion_{}_{}.svg", task.name(), model.name());
            let title = format!("{} / {}", task.name(), model.name());
            written.push(write_text(dir, &name, &report::confusion_svg(&c, &space, &title))?);
        }
    }
    if plots {
        written.push(write_text(dir, "accuracy_boxplot.svg", &report::boxplot_svg(&summaries))?);
    }
    Ok(written)
}

/// Writes a synthetic corpus as event log, metadata, dependency edges and
/// library map into `dir`.
pub fn write_synth(cfg: &LoadedConfig, dir: &Path) -> Result<(Corpus, Vec<PathBuf>), Error> {
    let s = &cfg.config.synth;
    let n_days = (s.end - s.created_on).num_days() as usize + 1;
    let specs = match s.preset.as_str() {
        "preset" => synth::mixed_preset(s.repos, s.seed, s.created_on, n_days),
        _ => synth::regime_mix(s.persistent, s.decaying, s.bursty, s.seed, s.created_on, n_days),
    };
    let corpus = synth::generate_corpus(&specs)?;
    let mut events = Vec::with_capacity(corpus.event_count());
    for repo in corpus.repos.values() {
        events.extend(repo.events.iter().cloned());
    }
    let mut ev_bytes = Vec::new();
    ingest::write_event_log(&events, &mut ev_bytes).expect("writing to memory");
    let mut meta_bytes = Vec::new();
    ingest::write_repo_metadata(corpus.repos.values().map(|r| &r.meta), &mut meta_bytes).expect("writing to memory");
    let ids: Vec<String> = corpus.repos.keys().cloned().collect();
    let snap = synth::synthetic_dependencies(&ids, s.edges_per_library, s.seed);
    let (edges, map) = synth::dependency_csvs(&snap);
    let mut written = Vec::new();
    for (name, bytes) in [
        ("events.jsonl", ev_bytes),
        ("metadata.jsonl", meta_bytes),
        ("dependencies.csv", edges.into_bytes()),
        ("library_map.csv", map.into_bytes()),
    ] {
        let path = dir.join(name);
        report::write_atomic(&path, &bytes)?;
        written.push(path);
    }
    Ok((corpus, written))
}
