use std::path::{Path, PathBuf};
use std::process;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use maintcast::config::{self, LoadedConfig, RunConfig};
use maintcast::pipeline;
use maintcast::report;
use maintcast::{Error, ExitCode};

#[derive(Parser, Debug)]
#[command(name = "maintcast", version, about = "Maintained-score reconstruction and forecasting")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(short, long, global = true)]
    jobs: Option<usize>,
    /// Output directory, overriding `paths.output`.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate the inputs without writing anything.
    IngestCheck,
    /// Daily Maintained scores for every repository.
    Reconstruct,
    /// PageRank over the dependency graph and the top-fraction selection.
    Rank,
    /// Yearly interactivity intervals and contributor stability.
    Analyze,
    /// Monthly targets: mean, rounded, bucket, slope and trend.
    Targets,
    /// Run the forecasting grid.
    Evaluate {
        /// Base seed, overriding `grid.seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, hide = true)]
        inject_leak: bool,
    },
    /// Generate a synthetic corpus.
    Synth {
        /// Directory for the generated inputs; defaults to the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summary statistics and confusion matrices from an evaluation.
    Report {
        /// Evaluation file; defaults to `evaluation.json` in the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also render SVG plots.
        #[arg(long)]
        plots: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::IngestCheck => "ingest-check",
            Command::Reconstruct => "reconstruct",
            Command::Rank => "rank",
            Command::Analyze => "analyze",
            Command::Targets => "targets",
            Command::Evaluate { .. } => "evaluate",
            Command::Synth { .. } => "synth",
            Command::Report { .. } => "report",
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Usage.code() } else { 0 };
            let _ = e.print();
            process::exit(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            process::exit(ExitCode::Usage.code());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool is configured once");
    }

    let name = cli.command.name();
    match run(&cli) {
        Ok(mut summary) => {
            summary["command"] = json!(name);
            summary["status"] = json!("ok");
            println!("{summary}");
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error[{}]: {e}", e.category());
            println!(
                "{}",
                json!({
                    "command": name,
                    "status": "error",
                    "category": e.category(),
                    "message": e.to_string(),
                    "exit_code": code.code(),
                })
            );
            process::exit(code.code());
        }
    }
}

fn load(cli: &Cli) -> Result<LoadedConfig, Error> {
    let mut loaded = match &cli.config {
        Some(path) => config::load_config(path).map_err(|e| Error::Config(vec![e]))?,
        None => LoadedConfig::from_config(RunConfig::default(), PathBuf::from(".")),
    };
    if let Command::Evaluate { seed: Some(seed), .. } = &cli.command {
        loaded.config.grid.seed = *seed;
        loaded.sha256 = config::sha256_hex(format!("{}\nseed={seed}", loaded.sha256).as_bytes());
    }
    if let Some(out) = &cli.output {
        loaded.config.paths.output = Some(std::path::absolute(out).unwrap_or_else(|_| out.clone()));
    }
    let problems = match cli.command {
        Command::Synth { .. } | Command::Report { .. } => config::validate_ranges(&loaded.config),
        _ => config::validate_config(&loaded),
    };
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    Ok(loaded)
}

fn paths(written: &[PathBuf]) -> Value {
    json!(written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
}

fn run(cli: &Cli) -> Result<Value, Error> {
    let cfg = load(cli)?;
    let out_dir = cfg.output_dir();
    let prov = pipeline::provenance(&cfg);
    match &cli.command {
        Command::IngestCheck => {
            let corpus = pipeline::load_corpus(&cfg)?;
            let mut summary = json!({
                "repos": corpus.repos.len(),
                "events": corpus.event_count(),
                "dropped_before": corpus.dropped_before,
                "dropped_after": corpus.dropped_after,
            });
            if cfg.config.paths.dependencies.is_some() {
                let snap = pipeline::load_dependencies(&cfg)?;
                let linked = snap.libraries.iter().filter(|l| snap.repo_of(l).is_some()).count();
                summary["libraries"] = json!(snap.libraries.len());
                summary["edges"] = json!(snap.edges.len());
                summary["linked_libraries"] = json!(linked);
            }
            Ok(summary)
        }
        Command::Reconstruct => {
            let corpus = pipeline::working_corpus(&cfg)?;
            let scores = pipeline::reconstruct(&cfg, &corpus)?;
            let file = pipeline::write_text(&out_dir, pipeline::SCORES_FILE, &report::scores_csv(&scores, &prov))?;
            Ok(json!({
                "repos": scores.len(),
                "days": corpus.period.days(),
                "files": paths(&[file]),
            }))
        }
        Command::Rank => {
            let sel = pipeline::rank(&cfg)?;
            let file = pipeline::write_text(&out_dir, pipeline::SELECTION_FILE, &report::selection_csv(&sel, &prov))?;
            Ok(json!({
                "selected": sel.selected.len(),
                "repositories": sel.repositories().len(),
                "excluded_no_repo": sel.excluded_no_repo,
                "files": paths(&[file]),
            }))
        }
        Command::Analyze => {
            let corpus = pipeline::working_corpus(&cfg)?;
            let (intervals, stability) = pipeline::analyze(&cfg, &corpus)?;
            let files = [
                pipeline::write_text(&out_dir, pipeline::INTERVALS_FILE, &report::intervals_csv(&intervals, &prov))?,
                pipeline::write_text(&out_dir, pipeline::STABILITY_FILE, &report::stability_csv(&stability, &prov))?,
            ];
            Ok(json!({ "years": intervals.len(), "files": paths(&files) }))
        }
        Command::Targets => {
            let corpus = pipeline::working_corpus(&cfg)?;
            let scores = pipeline::reconstruct(&cfg, &corpus)?;
            let (monthly, removed) = pipeline::monthly(&cfg, &scores)?;
            let text = report::targets_csv(&monthly, cfg.config.grid.epsilon, &prov);
            let file = pipeline::write_text(&out_dir, pipeline::TARGETS_FILE, &text)?;
            Ok(json!({
                "repos": monthly.len(),
                "removed_extremes": removed,
                "blocks": monthly.values().map(Vec::len).max().unwrap_or(0),
                "files": paths(&[file]),
            }))
        }
        Command::Evaluate { inject_leak, .. } => {
            let corpus = pipeline::working_corpus(&cfg)?;
            let scores = pipeline::reconstruct(&cfg, &corpus)?;
            let (monthly, removed) = pipeline::monthly(&cfg, &scores)?;
            let outcome = pipeline::evaluate(&cfg, &monthly, *inject_leak)?;
            let files = pipeline::write_outcome(&out_dir, &outcome, &prov)?;
            Ok(json!({
                "repos": outcome.n_repos,
                "removed_extremes": removed,
                "blocks": outcome.n_blocks,
                "records": outcome.records.len(),
                "skipped": outcome.skipped.len(),
                "files": paths(&files),
            }))
        }
        Command::Synth { out } => {
            let dir = out.clone().unwrap_or(out_dir);
            let (corpus, files) = pipeline::write_synth(&cfg, &dir)?;
            Ok(json!({
                "repos": corpus.repos.len(),
                "events": corpus.event_count(),
                "files": paths(&files),
            }))
        }
        Command::Report { input, plots } => {
            let input = input.clone().unwrap_or_else(|| out_dir.join(pipeline::OUTCOME_FILE));
            let outcome = pipeline::read_outcome(Path::new(&input))?;
            let files = pipeline::write_report(&out_dir, &outcome.records, cfg.config.grid.slope_step, *plots, &prov)?;
            Ok(json!({ "records": outcome.records.len(), "files": paths(&files) }))
        }
    }
}
