#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use chrono::{Duration, NaiveDate};
use maintcast::analytics::{contributor_stability, mean_interactivity_days, repo_month_jaccard, ActivityKind};
use maintcast::depgraph::{pagerank, DependencyGraph, PageRankParams};
use maintcast::eval::{
    leakage_check, majority_baseline_cell, plan_grid, run_grid, EvaluationRecord, GridOutcome, GridSpec, LabelSpace,
};
use maintcast::features::{SampleOrigin, SampleSet};
use maintcast::ingest::{ActivityEvent, RepoData, RepoMetadata};
use maintcast::models::{lstm_gradient_check, GradCheckDims, ModelKind};
use maintcast::pipeline;
use maintcast::report::{read_table, Provenance};
use maintcast::scorecard::{reconstruct_corpus, reconstruct_repo, ScoreParams};
use maintcast::synth::{self, Regime, RegimeSpec};
use maintcast::targets::{corpus_monthly, filter_monthly_extremes, BlockScheme, Bucket, Task};
use maintcast::Period;
use rand::Rng;

fn d(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

fn study_period() -> Period {
    Period::new(d("2021-01-01"), d("2023-12-31")).unwrap()
}

fn c1_oracle_equivalence() {
    let corpus = common::hundred_repo_corpus();
    assert_eq!(corpus.repos.len(), 100);
    assert_eq!(corpus.period.days(), 1095);
    let t0 = Instant::now();
    let scores = reconstruct_corpus(&corpus, &ScoreParams::default()).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    for (id, repo) in &corpus.repos {
        let naive = common::naive_scores(&repo.meta, &repo.events, corpus.period.start, corpus.period.end);
        assert_eq!(scores[id].sums.commit_sum, naive.commit_sum, "{id}");
        assert_eq!(scores[id].sums.issue_sum, naive.issue_sum, "{id}");
        assert_eq!(scores[id].series.score, naive.score, "{id}");
    }
    assert!(elapsed < 10.0, "{elapsed} s");
}

fn c2_perfect_score() {
    let p = study_period();
    let spec = RegimeSpec::new("p10", Regime::Persistent { level: 10 }, 1, d("2020-06-01"), 1309);
    let corpus = synth::generate_corpus(&[spec]).unwrap().restrict(p);
    let s = &reconstruct_corpus(&corpus, &ScoreParams::default()).unwrap()["p10"];
    assert!(s.series.gate.iter().zip(&s.series.score).all(|(&g, &v)| g == 0 || v == 10));

    let mut rng = maintcast::seed::rng(2);
    for case in 0..200 {
        let spacing = rng.random_range(1..=6i64);
        let created = d("2020-01-01") + Duration::days(rng.random_range(0..900));
        let mut events = Vec::new();
        let mut t = p.start - Duration::days(89) + Duration::days(rng.random_range(0..spacing));
        while t <= p.end {
            events.push(ActivityEvent::commit("r", t));
            t += Duration::days(spacing);
        }
        for _ in 0..rng.random_range(0..50) {
            events.push(ActivityEvent::commit("r", p.start + Duration::days(rng.random_range(0..1095))));
        }
        let meta = RepoMetadata {
            repo_id: "r".into(),
            created_on: created,
            archived_on: None,
            url: String::new(),
        };
        let s = reconstruct_repo(&RepoData { meta, events }, p, &ScoreParams::default()).unwrap();
        for ((&g, &v), &c) in s.series.gate.iter().zip(&s.series.score).zip(&s.sums.commit_sum) {
            assert!(c >= 13, "case {case}");
            assert_eq!(v, if g == 1 { 10 } else { 0 }, "case {case}");
        }
    }
}

fn c3_gate_law() {
    let corpus = common::hundred_repo_corpus();
    let scores = reconstruct_corpus(&corpus, &ScoreParams::default()).unwrap();
    let (mut young, mut archived) = (0, 0);
    for (id, repo) in &corpus.repos {
        let open = repo.meta.created_on + Duration::days(90);
        for (i, &v) in scores[id].series.score.iter().enumerate() {
            let t = corpus.period.day(i);
            let after = repo.meta.archived_on.is_some_and(|a| t > a);
            if t < open || after {
                young += usize::from(t < open);
                archived += usize::from(after);
                assert_eq!(v, 0, "{id} {t}");
            }
        }
    }
    assert!(young > 0 && archived > 0);
}

fn c4_bucket_table() {
    let expect = [(0, Bucket::Low), (2, Bucket::Low), (3, Bucket::Moderate), (7, Bucket::Moderate), (8, Bucket::High), (10, Bucket::High)];
    for (score, bucket) in expect {
        assert_eq!(Bucket::of(score), bucket, "{score}");
    }
}

fn signal_corpus_outcome() -> GridOutcome {
    let start = d("2020-06-01");
    let n_days = (d("2023-12-31") - start).num_days() as usize + 1;
    let specs = synth::regime_mix(120, 40, 40, 7, start, n_days);
    let corpus = synth::generate_corpus(&specs).unwrap().restrict(study_period());
    assert_eq!(corpus.repos.len(), 200);
    let scores = reconstruct_corpus(&corpus, &ScoreParams::default()).unwrap();
    let (monthly, _) = filter_monthly_extremes(corpus_monthly(&scores, BlockScheme::Fixed30).unwrap());
    let spec = GridSpec {
        tasks: vec![Task::Raw],
        models: vec![ModelKind::VarmaStat, ModelKind::RandomForest, ModelKind::Lstm],
        windows: vec![3, 6, 12],
        horizons: vec![1, 3, 6],
        shifts: 12,
        train_history: Some(6),
        keep_predictions: true,
        ..GridSpec::default()
    };
    run_grid::<f64>(&spec, &monthly).unwrap()
}

fn c5_coarsening(outcome: &GridOutcome) {
    let raw: Vec<&EvaluationRecord> = outcome.records.iter().filter(|r| r.key.task == Task::Raw).collect();
    assert!(!raw.is_empty());
    for r in raw {
        let c = r.coarse_accuracy.expect("raw cells carry coarse accuracy");
        assert!(c >= r.accuracy, "{}: {c} < {}", r.key, r.accuracy);
    }
}

fn c6_leakage(bin_dir: &Path) {
    let mut rng = maintcast::seed::rng(6);
    let (mut leaking, mut clean) = (0, 0);
    for _ in 0..10_000 {
        let t = rng.random_range(3..=12usize);
        let test_block = rng.random_range(0..52usize);
        let mut set = SampleSet::<f64>::empty(Task::Raw, t, 1);
        let mut leaks = false;
        for _ in 0..rng.random_range(1..4) {
            let last = t - 1 + rng.random_range(0..40usize);
            let h = rng.random_range(1..=6usize);
            set.push(&vec![0.0; t], 0.0, h, SampleOrigin { repo_id: "r".into(), last_block: last });
            leaks |= common::placement_leaks(last, t, h, test_block);
        }
        assert_eq!(leakage_check(&set, test_block), !leaks);
        if leaks {
            leaking += 1
        } else {
            clean += 1
        }
    }
    assert!(leaking > 1000 && clean > 1000);

    let cfg = "[synth]\npersistent = 9\ndecaying = 3\nbursty = 3\n[paths]\nevents = \"data/events.jsonl\"\nmetadata = \"data/metadata.jsonl\"\noutput = \"out\"\n[grid]\ntasks = [\"raw\"]\nmodels = [\"varma\"]\nwindows = [3]\nhorizons = [1]\nshifts = 1\n";
    std::fs::write(bin_dir.join("leak.toml"), cfg).unwrap();
    assert!(maintcast_bin(bin_dir, &["-c", "leak.toml", "synth", "--out", "data"]).success());
    let status = maintcast_bin(bin_dir, &["-c", "leak.toml", "evaluate", "--inject-leak"]);
    assert_eq!(status.code(), Some(3));
}

fn c7_gradient_check() {
    let t0 = Instant::now();
    for seed in 1..=6 {
        let err = lstm_gradient_check(GradCheckDims::default(), seed);
        assert!(err <= 1e-4, "seed {seed}: {err}");
    }
    assert!(t0.elapsed().as_secs_f64() < 30.0);
}

fn maintcast_bin(dir: &Path, args: &[&str]) -> std::process::ExitStatus {
    Command::new(env!("CARGO_BIN_EXE_maintcast"))
        .args(args)
        .current_dir(dir)
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap()
}

fn c8_determinism(dir: &Path) {
    let cfg = "[paths]\nevents = \"data/events.jsonl\"\nmetadata = \"data/metadata.jsonl\"\n\
        [selection]\napply = false\n\
        [grid]\ntasks = [\"raw\", \"bucket\", \"slope\", \"trend\"]\nmodels = [\"varma\", \"forest\", \"lstm\"]\n\
        windows = [3, 6]\nhorizons = [1, 3]\nshifts = 2\ntrain_history = 6\n";
    std::fs::write(dir.join("det.toml"), cfg).unwrap();
    assert!(maintcast_bin(dir, &["-c", "det.toml", "synth", "--out", "data"]).success());
    let meta = std::fs::read_to_string(dir.join("data/metadata.jsonl")).unwrap();
    assert_eq!(meta.lines().count(), 200);
    for (jobs, out) in [("1", "j1"), ("8", "j8")] {
        assert!(maintcast_bin(dir, &["-c", "det.toml", "-j", jobs, "-o", out, "evaluate"]).success());
    }
    let a = std::fs::read(dir.join("j1/records.csv")).unwrap();
    let b = std::fs::read(dir.join("j8/records.csv")).unwrap();
    assert!(read_table(&String::from_utf8_lossy(&a)).1.len() > 100);
    assert!(a == b, "records.csv differs between job counts");
}

fn ranks(n: usize, edges: &[(usize, usize)], params: &PageRankParams<f64>) -> Vec<f64> {
    let names: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
    let named: Vec<(&str, &str)> = edges.iter().map(|&(a, b)| (names[a].as_str(), names[b].as_str())).collect();
    let g = DependencyGraph::<f64>::from_edges(names.iter().map(String::as_str), named.into_iter());
    pagerank(g, params).unwrap().graph.pagerank.unwrap()
}

fn c9_pagerank() {
    let default = PageRankParams::default();
    for n in 2..=60 {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        for r in ranks(n, &edges, &default) {
            assert!((r - 1.0 / n as f64).abs() <= 1e-10, "ring {n}");
        }
    }
    let tight = PageRankParams {
        tol: 1e-15,
        max_iter: 10_000,
        ..PageRankParams::default()
    };
    let mut rng = maintcast::seed::rng(9);
    for _ in 0..300 {
        let edges: Vec<(usize, usize)> =
            (0..rng.random_range(0..40)).map(|_| (rng.random_range(0..10), rng.random_range(0..10))).collect();
        let oracle = common::dense_pagerank(10, &edges, 0.85);
        for (a, b) in ranks(10, &edges, &tight).iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
        let sum: f64 = ranks(10, &edges, &default).iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9);
    }
}

fn c10_baseline() {
    let space = LabelSpace::new(Task::Raw, 1.0);
    let mut rng = maintcast::seed::rng(10);
    let mut ties = 0;
    for _ in 0..1000 {
        let alphabet = rng.random_range(1..=4i64);
        let base = rng.random_range(0..=6i64);
        let train: Vec<f64> =
            (0..rng.random_range(1..=12)).map(|_| (base + rng.random_range(0..alphabet)) as f64).collect();
        let test: Vec<f64> = (0..rng.random_range(1..=10)).map(|_| rng.random_range(0..=10i64) as f64).collect();
        let codes: Vec<i64> = train.iter().map(|&v| v as i64).collect();
        let expected = common::brute_majority(&codes).unwrap();
        let mut counts = BTreeMap::new();
        for &c in &codes {
            *counts.entry(c).or_insert(0) += 1;
        }
        let top = *counts.values().max().unwrap();
        ties += usize::from(counts.values().filter(|&&c| c == top).count() > 1);
        let rec = majority_baseline_cell(&space, &train, &test).unwrap();
        let hits = test.iter().filter(|&&v| v as i64 == expected).count();
        assert_eq!(rec.accuracy, hits as f64 / test.len() as f64);
        let col = space.index_of(expected).unwrap();
        assert_eq!(rec.confusion.counts.iter().map(|row| row[col]).sum::<u64>(), test.len() as u64);
    }
    assert!(ties > 100);
}

fn c11_signal_recovery(outcome: &GridOutcome, elapsed: f64) {
    let mut persistent: BTreeMap<ModelKind, (usize, usize)> = BTreeMap::new();
    let mut coarse: BTreeMap<ModelKind, Vec<f64>> = BTreeMap::new();
    for r in &outcome.records {
        coarse.entry(r.key.model).or_default().push(r.coarse_accuracy.unwrap());
        for p in r.predictions.as_ref().unwrap() {
            if synth::family_of(&p.repo_id) == "persistent" {
                let e = persistent.entry(r.key.model).or_default();
                e.0 += usize::from(common::bucket_code(p.pred_code) == common::bucket_code(p.true_code));
                e.1 += 1;
            }
        }
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let baseline = mean(&coarse[&ModelKind::Majority]);
    for model in [ModelKind::VarmaStat, ModelKind::RandomForest, ModelKind::Lstm] {
        let (hit, n) = persistent[&model];
        let acc = hit as f64 / n as f64;
        let m = mean(&coarse[&model]);
        println!("    {model:?}: persistent bucketed {acc:.4}, mean bucketed {m:.4} vs baseline {baseline:.4}");
        assert!(acc >= 0.99, "{model:?} persistent {acc}");
        assert!(m - baseline >= 0.02, "{model:?} margin {}", m - baseline);
        assert_eq!(coarse[&model].len(), 3 * 3 * 12);
    }
    println!("    grid run took {elapsed:.1} s");
    assert!(elapsed < 600.0, "{elapsed} s");
}

fn c12_replication_structure(dir: &Path, outcome: &GridOutcome) {
    let spec = GridSpec::default();
    let (planned, skipped) = plan_grid(&spec, 12 + 6 + 12);
    assert!(skipped.is_empty());
    let mut per_pair: BTreeMap<(Task, ModelKind), usize> = BTreeMap::new();
    for c in &planned {
        *per_pair.entry((c.key.task, c.key.model)).or_default() += 1;
    }
    assert_eq!(per_pair.len(), 16);
    assert!(per_pair.values().all(|&n| n == 10 * 6 * 12));

    let prov = Provenance::new("0".repeat(64));
    pipeline::write_report(dir, &outcome.records, spec.slope_step, false, &prov).unwrap();
    let (header, rows) = read_table(&std::fs::read_to_string(dir.join(pipeline::SUMMARY_FILE)).unwrap());
    for col in ["task", "model", "mean", "median", "q1", "q3", "iqr"] {
        assert!(header.iter().any(|h| h == col), "{col}");
    }
    assert_eq!(rows.len(), 4);
}

fn c13_analytics() {
    let corpus = common::five_repo_fixture();
    let s = mean_interactivity_days(&corpus, 2022);
    assert_eq!((s.mean_commit_gap_days, s.active_commit_repos), (26.25, 4));
    assert_eq!((s.mean_issue_gap_days, s.active_issue_repos), (17.5, 2));
    assert_eq!(s.overall_mean, 21.875);
    let j = |id: &str, kind| repo_month_jaccard(&corpus.repos[id].events, 2022, kind).unwrap();
    assert_eq!(j("b", ActivityKind::Commit), Some(1.0 / 3.0));
    assert_eq!(j("c", ActivityKind::Commit), Some(0.5 / 3.0));
    assert_eq!(j("e", ActivityKind::Commit), Some(0.25));
    assert_eq!(j("a", ActivityKind::Commit), None);
    let st = contributor_stability(&corpus, 2022).unwrap();
    assert!((st.mean_commit_jaccard - 0.25).abs() <= 1e-15);
    assert_eq!(st.active_commit_repos, 3);
    assert_eq!((st.mean_issue_jaccard, st.active_issue_repos), (0.5 / 3.0, 1));
}

fn check(failures: &mut usize, n: usize, name: &str, f: impl FnOnce()) {
    let t0 = Instant::now();
    let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
    let secs = t0.elapsed().as_secs_f64();
    println!("criterion {n:2} {name}: {} ({secs:.1} s)", if ok { "PASS" } else { "FAIL" });
    *failures += usize::from(!ok);
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let mut failures = 0;
    check(&mut failures, 1, "score oracle equivalence", c1_oracle_equivalence);
    check(&mut failures, 2, "perfect score law", c2_perfect_score);
    check(&mut failures, 3, "gate law", c3_gate_law);
    check(&mut failures, 4, "bucket boundaries", c4_bucket_table);

    let t0 = Instant::now();
    let outcome = catch_unwind(signal_corpus_outcome).ok();
    let grid_secs = t0.elapsed().as_secs_f64();
    check(&mut failures, 5, "coarsening monotonicity", || c5_coarsening(outcome.as_ref().unwrap()));
    check(&mut failures, 6, "leakage guard", || c6_leakage(tmp.path()));
    check(&mut failures, 7, "gradient check", c7_gradient_check);
    check(&mut failures, 8, "determinism across job counts", || c8_determinism(tmp.path()));
    check(&mut failures, 9, "pagerank", c9_pagerank);
    check(&mut failures, 10, "majority baseline", c10_baseline);
    check(&mut failures, 11, "signal recovery", || c11_signal_recovery(outcome.as_ref().unwrap(), grid_secs));
    check(&mut failures, 12, "replication grid structure", || {
        c12_replication_structure(&tmp.path().join("report"), outcome.as_ref().unwrap())
    });
    check(&mut failures, 13, "analytics fixture", c13_analytics);

    println!("{} of 13 criteria passed", 13 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
