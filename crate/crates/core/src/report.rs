//! CSV and SVG outputs.
//!
//! Every CSV starts with a `#` comment naming the tool version and the hash of
//! the configuration that produced it. Floats use Rust's shortest round-trip
//! formatting and lines end in `\n`, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analytics::{IntervalStats, StabilityStats};
use crate::depgraph::SelectionResult;
use crate::error::Error;
use crate::eval::{AggregateSummary, Confusion, EvaluationRecord, LabelSpace};
use crate::models::ModelKind;
use crate::scalar::Real;
use crate::scorecard::RepoScores;
use crate::targets::{Bucket, MonthlyPoint, Task, Trend};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub version: String,
    pub config_sha256: String,
}

impl Provenance {
    pub fn new(config_sha256: impl Into<String>) -> Self {
        Self {
            version: crate::VERSION.to_string(),
            config_sha256: config_sha256.into(),
        }
    }

    pub fn header(&self) -> String {
        format!("# tool=maintcast {} config_sha256={}\n", self.version, self.config_sha256)
    }
}

struct Table {
    out: String,
}

impl Table {
    fn new(prov: &Provenance, columns: &[&str]) -> Self {
        let mut out = prov.header();
        out.push_str(&columns.join(","));
        out.push('\n');
        Self { out }
    }

    fn row(&mut self, fields: &[String]) {
        let escaped: Vec<String> = fields.iter().map(|f| escape(f)).collect();
        self.out.push_str(&escaped.join(","));
        self.out.push('\n');
    }
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Shortest round-trip decimal.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Strips `#` comment lines, leaving plain CSV.
pub fn strip_comments(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .fold(String::new(), |mut acc, l| {
            acc.push_str(l);
            acc.push('\n');
            acc
        })
}

/// Writes `bytes` to `path` through a `.partial` sibling that is renamed on
/// success and removed on failure.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let partial = partial_path(path);
    let fail = |source| Error::Output {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(fail)?;
        }
    }
    if let Err(e) = std::fs::write(&partial, bytes).and_then(|_| std::fs::rename(&partial, path)) {
        let _ = std::fs::remove_file(&partial);
        return Err(fail(e));
    }
    Ok(())
}

pub fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// `repo,date,commit_sum,issue_sum,gate,score`, one row per repository day.
pub fn scores_csv(scores: &BTreeMap<String, RepoScores>, prov: &Provenance) -> String {
    let mut t = Table::new(prov, &["repo", "date", "commit_sum", "issue_sum", "gate", "score"]);
    for (repo, s) in scores {
        for (i, &score) in s.series.score.iter().enumerate() {
            let date = s.series.start + chrono::Duration::days(i as i64);
            t.row(&[
                repo.clone(),
                date.to_string(),
                s.sums.commit_sum[i].to_string(),
                s.sums.issue_sum[i].to_string(),
                s.series.gate[i].to_string(),
                score.to_string(),
            ]);
        }
    }
    t.out
}

pub fn selection_csv<T: Real>(sel: &SelectionResult<T>, prov: &Provenance) -> String {
    let mut t = Table::new(prov, &["rank", "library", "repo", "pagerank"]);
    for (i, s) in sel.selected.iter().enumerate() {
        t.row(&[
            (i + 1).to_string(),
            s.library.clone(),
            s.repo_id.clone(),
            fmt_f64(s.pagerank.as_f64()),
        ]);
    }
    t.out
}

pub fn intervals_csv(stats: &[IntervalStats], prov: &Provenance) -> String {
    let mut t = Table::new(
        prov,
        &[
            "year",
            "mean_commit_gap_days",
            "commit_repos",
            "mean_issue_gap_days",
            "issue_repos",
            "overall_mean_days",
        ],
    );
    for s in stats {
        t.row(&[
            s.year.to_string(),
            fmt_f64(s.mean_commit_gap_days),
            s.active_commit_repos.to_string(),
            fmt_f64(s.mean_issue_gap_days),
            s.active_issue_repos.to_string(),
            fmt_f64(s.overall_mean),
        ]);
    }
    t.out
}

pub fn stability_csv(stats: &[StabilityStats], prov: &Provenance) -> String {
    let mut t = Table::new(
        prov,
        &["year", "mean_commit_jaccard", "commit_repos", "mean_issue_jaccard", "issue_repos"],
    );
    for s in stats {
        t.row(&[
            s.year.to_string(),
            fmt_f64(s.mean_commit_jaccard),
            s.active_commit_repos.to_string(),
            fmt_f64(s.mean_issue_jaccard),
            s.active_issue_repos.to_string(),
        ]);
    }
    t.out
}

/// `repo,block,mean_score,rounded,bucket,slope,trend`; the first block has no slope.
pub fn targets_csv(monthly: &BTreeMap<String, Vec<MonthlyPoint>>, epsilon: f64, prov: &Provenance) -> String {
    let mut t = Table::new(prov, &["repo", "block", "mean_score", "rounded", "bucket", "slope", "trend"]);
    for (repo, points) in monthly {
        for (i, p) in points.iter().enumerate() {
            let slope = (i > 0).then(|| p.mean_score - points[i - 1].mean_score);
            t.row(&[
                repo.clone(),
                p.block_index.to_string(),
                fmt_f64(p.mean_score),
                p.rounded_score.to_string(),
                Bucket::of(p.rounded_score).name().to_string(),
                slope.map(fmt_f64).unwrap_or_default(),
                slope.map(|s| Trend::of(s, epsilon).name().to_string()).unwrap_or_default(),
            ]);
        }
    }
    t.out
}

pub const RECORD_COLUMNS: [&str; 11] = [
    "task", "model", "window", "horizon", "shift", "n_test", "accuracy", "mae", "r2", "macro_f1", "seed",
];

pub fn records_csv(records: &[EvaluationRecord], prov: &Provenance) -> String {
    let mut t = Table::new(prov, &RECORD_COLUMNS);
    for r in records {
        t.row(&[
            r.key.task.name().to_string(),
            r.key.model.name().to_string(),
            r.key.window.to_string(),
            r.key.horizon.to_string(),
            r.key.shift.to_string(),
            r.n_test.to_string(),
            fmt_f64(r.accuracy),
            fmt_f64(r.mae),
            fmt_f64(r.r2),
            fmt_f64(r.macro_f1),
            r.seed.to_string(),
        ]);
    }
    t.out
}

pub const SUMMARY_COLUMNS: [&str; 10] = ["task", "model", "mean", "median", "q1", "q3", "iqr", "min", "max", "n_cells"];

pub fn summary_csv(summaries: &[AggregateSummary], prov: &Provenance) -> String {
    let mut t = Table::new(prov, &SUMMARY_COLUMNS);
    for s in summaries {
        t.row(&[
            s.task.name().to_string(),
            s.model.name().to_string(),
            fmt_f64(s.mean),
            fmt_f64(s.median),
            fmt_f64(s.q1),
            fmt_f64(s.q3),
            fmt_f64(s.iqr),
            fmt_f64(s.min),
            fmt_f64(s.max),
            s.n_cells.to_string(),
        ]);
    }
    t.out
}

/// Counts (or row shares when `normalized`) with true labels down the rows.
pub fn confusion_csv(c: &Confusion, space: &LabelSpace, normalized: bool, prov: &Provenance) -> String {
    let mut cols = vec!["true\\pred".to_string()];
    cols.extend(c.labels.iter().map(|&l| space.name(l)));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(prov, &col_refs);
    let shares = c.row_normalized();
    for (i, &l) in c.labels.iter().enumerate() {
        let mut row = vec![space.name(l)];
        if normalized {
            row.extend(shares[i].iter().map(|&v| fmt_f64(v)));
        } else {
            row.extend(c.counts[i].iter().map(u64::to_string));
        }
        t.row(&row);
    }
    t.out
}

pub fn confusion_file_name(task: Task, model: ModelKind, normalized: bool) -> String {
    if normalized {
        format!("confusion_{}_{}_normalized.csv", task.name(), model.name())
    } else {
        format!("confusion_{}_{}.csv", task.name(), model.name())
    }
}

/// Minimal CSV reader for files written here: skips comments, splits on
/// commas, undoes quoting.
pub fn read_table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let body = strip_comments(text);
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = rdr
        .headers()
        .map(|h| h.iter().map(str::to_string).collect())
        .unwrap_or_default();
    let rows = rdr
        .records()
        .filter_map(Result::ok)
        .map(|r| r.iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

/// Box plots of accuracy per model, one panel per task.
pub fn boxplot_svg(summaries: &[AggregateSummary]) -> String {
    let mut by_task: BTreeMap<Task, Vec<&AggregateSummary>> = BTreeMap::new();
    for s in summaries {
        by_task.entry(s.task).or_default().push(s);
    }
    let (panel_w, panel_h, pad) = (260.0, 240.0, 40.0);
    let width = pad + by_task.len().max(1) as f64 * (panel_w + pad);
    let height = panel_h + 2.0 * pad + 30.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let y = |v: f64| pad + panel_h * (1.0 - v.clamp(0.0, 1.0));
    for (p, (task, rows)) in by_task.iter().enumerate() {
        let x0 = pad + p as f64 * (panel_w + pad);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, x0 + panel_w / 2.0, pad - 12.0, task.name());
        let _ = writeln!(
            svg,
            r##"<rect x="{x0}" y="{pad}" width="{panel_w}" height="{panel_h}" fill="none" stroke="#999"/>"##
        );
        for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{tick}</text>"#, x0 - 4.0, y(tick) + 4.0);
        }
        let slot = panel_w / rows.len().max(1) as f64;
        for (i, s) in rows.iter().enumerate() {
            let cx = x0 + slot * (i as f64 + 0.5);
            let bw = slot * 0.5;
            let _ = writeln!(
                svg,
                r##"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}" stroke="#333"/>"##,
                y(s.max),
                y(s.min)
            );
            let _ = writeln!(
                svg,
                r##"<rect x="{}" y="{}" width="{bw}" height="{}" fill="#9ecae1" stroke="#333"/>"##,
                cx - bw / 2.0,
                y(s.q3),
                (y(s.q1) - y(s.q3)).max(0.5)
            );
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{my}" x2="{}" y2="{my}" stroke="#d62728" stroke-width="2"/>"##,
                cx - bw / 2.0,
                cx + bw / 2.0,
                my = y(s.median)
            );
            let _ = writeln!(svg, r##"<circle cx="{cx}" cy="{}" r="2.5" fill="#333"/>"##, y(s.mean));
            let _ = writeln!(
                svg,
                r#"<text x="{cx}" y="{}" text-anchor="middle">{}</text>"#,
                pad + panel_h + 14.0,
                s.model.name()
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Row-normalized confusion heat map.
pub fn confusion_svg(c: &Confusion, space: &LabelSpace, title: &str) -> String {
    let n = c.labels.len().max(1);
    let cell = (360.0 / n as f64).clamp(14.0, 60.0);
    let pad = 80.0;
    let side = cell * n as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="10">"#,
        side + pad + 20.0,
        side + pad + 20.0
    );
    let _ = writeln!(svg, r#"<text x="{pad}" y="16">{title}</text>"#);
    let shares = c.row_normalized();
    for (i, row) in shares.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            pad - 4.0,
            pad + cell * (i as f64 + 0.6),
            space.name(c.labels[i])
        );
        for (j, &v) in row.iter().enumerate() {
            let shade = (255.0 * (1.0 - v)).round() as u8;
            let _ = writeln!(
                svg,
                r##"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="#fff"><title>{}</title></rect>"##,
                pad + cell * j as f64,
                pad + cell * i as f64,
                fmt_f64(v)
            );
        }
    }
    for (j, &l) in c.labels.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            pad + cell * (j as f64 + 0.5),
            pad - 6.0,
            space.name(l)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
