mod common;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use maintcast::eval::{
    leakage_check, majority_baseline_cell, plan_grid, run_grid, score_cell, CellKey, EvalError, GridSpec, LabelSpace,
};
use maintcast::features::{SampleOrigin, SampleSet};
use maintcast::models::ModelKind;
use maintcast::scorecard::{reconstruct_corpus, ScoreParams};
use maintcast::synth;
use maintcast::targets::{corpus_monthly, BlockScheme, Bucket, MonthlyPoint, Task, Trend};
use maintcast::Period;
use proptest::prelude::*;

fn key(task: Task) -> CellKey {
    CellKey {
        task,
        model: ModelKind::VarmaStat,
        window: 3,
        horizon: 1,
        shift: 0,
    }
}

#[test]
fn bucket_boundaries() {
    let expect = [(0, Bucket::Low), (2, Bucket::Low), (3, Bucket::Moderate), (7, Bucket::Moderate), (8, Bucket::High), (10, Bucket::High)];
    for (score, bucket) in expect {
        assert_eq!(Bucket::of(score), bucket, "{score}");
    }
    for s in 0..=10u8 {
        assert_eq!(Bucket::of(s).code() as i64, common::bucket_code(s as i64));
    }
}

#[test]
fn trend_band_edges() {
    assert_eq!(Trend::of(0.5, 0.5), Trend::Stable);
    assert_eq!(Trend::of(-0.5, 0.5), Trend::Stable);
    assert_eq!(Trend::of(0.51, 0.5), Trend::Upward);
    assert_eq!(Trend::of(-0.51, 0.5), Trend::Downward);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn coarsening_never_lowers_accuracy(
        pairs in prop::collection::vec((-3.0f64..13.0, 0u8..=10), 1..80),
    ) {
        let space = LabelSpace::new(Task::Raw, 1.0);
        let (pred, truth): (Vec<f64>, Vec<f64>) = pairs.iter().map(|&(p, t)| (p, t as f64)).unzip();
        let rec = score_cell(key(Task::Raw), &space, &pred, &truth, None).unwrap();
        let coarse = rec.coarse_accuracy.unwrap();
        prop_assert!(coarse >= rec.accuracy);
        let hits = pred
            .iter()
            .zip(&truth)
            .filter(|(p, t)| common::bucket_code(p.round().clamp(0.0, 10.0) as i64) == common::bucket_code(**t as i64))
            .count();
        prop_assert!((coarse - hits as f64 / pred.len() as f64).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn leakage_check_matches_placement_oracle(
        t in 3usize..=12,
        placements in prop::collection::vec((0usize..40, 1usize..=6), 1..4),
        test_block in 0usize..52,
    ) {
        let mut set = SampleSet::<f64>::empty(Task::Raw, t, 1);
        let mut leaks = false;
        for &(offset, h) in &placements {
            let last = t - 1 + offset;
            set.push(&vec![0.0; t], 0.0, h, SampleOrigin { repo_id: "r".into(), last_block: last });
            leaks |= common::placement_leaks(last, t, h, test_block);
        }
        prop_assert_eq!(leakage_check(&set, test_block), !leaks);
    }
}

fn label_set(seed: u64) -> (Vec<f64>, Vec<f64>) {
    // small alphabets and lengths make ties common
    let mut rng = maintcast::seed::rng(seed);
    use rand::Rng;
    let alphabet = rng.random_range(1..=4usize);
    let base = rng.random_range(0..=6i64);
    let n = rng.random_range(1..=12usize);
    let train: Vec<f64> = (0..n).map(|_| (base + rng.random_range(0..alphabet as i64)) as f64).collect();
    let test: Vec<f64> = (0..rng.random_range(1..=10usize)).map(|_| rng.random_range(0..=10i64) as f64).collect();
    (train, test)
}

#[test]
fn baseline_matches_frequency_count() {
    let space = LabelSpace::new(Task::Raw, 1.0);
    let mut ties = 0;
    for seed in 0..1000 {
        let (train, test) = label_set(seed);
        let codes: Vec<i64> = train.iter().map(|&v| v as i64).collect();
        let expected = common::brute_majority(&codes).unwrap();
        let mut counts = BTreeMap::new();
        for &c in &codes {
            *counts.entry(c).or_insert(0) += 1;
        }
        let top = counts.values().max().unwrap();
        ties += usize::from(counts.values().filter(|&c| c == top).count() > 1);

        let rec = majority_baseline_cell(&space, &train, &test).unwrap();
        let hits = test.iter().filter(|&&v| v as i64 == expected).count();
        assert_eq!(rec.accuracy, hits as f64 / test.len() as f64, "seed {seed}");
        let col = space.index_of(expected).unwrap();
        let predicted: u64 = rec.confusion.counts.iter().map(|row| row[col]).sum();
        assert_eq!(predicted, test.len() as u64, "seed {seed}: every prediction is the modal label");
    }
    assert!(ties > 100, "only {ties} tie cases");
}

#[test]
fn baseline_rejects_empty_training() {
    let space = LabelSpace::new(Task::Bucket, 1.0);
    assert!(matches!(majority_baseline_cell(&space, &[], &[1.0]), Err(EvalError::EmptyInput)));
}

fn small_monthly() -> BTreeMap<String, Vec<MonthlyPoint>> {
    let created: NaiveDate = "2020-06-01".parse().unwrap();
    let specs = synth::regime_mix(6, 3, 3, 5, created, 1309);
    let period = Period::new("2021-01-01".parse().unwrap(), "2023-12-31".parse().unwrap()).unwrap();
    let corpus = synth::generate_corpus(&specs).unwrap().restrict(period);
    let scores = reconstruct_corpus(&corpus, &ScoreParams::default()).unwrap();
    corpus_monthly(&scores, BlockScheme::Fixed30).unwrap()
}

fn small_spec() -> GridSpec {
    GridSpec {
        tasks: Task::ALL.to_vec(),
        models: vec![ModelKind::VarmaStat],
        windows: vec![3, 5],
        horizons: vec![1, 2],
        shifts: 3,
        ..GridSpec::default()
    }
}

#[test]
fn injected_leak_aborts_the_grid() {
    let monthly = small_monthly();
    let spec = GridSpec {
        inject_leak: true,
        ..small_spec()
    };
    match run_grid::<f64>(&spec, &monthly) {
        Err(EvalError::Leakage(_)) => {}
        other => panic!("expected leakage, got {other:?}"),
    }
}

#[test]
fn every_cell_respects_coarsening_and_is_deterministic() {
    let monthly = small_monthly();
    let spec = small_spec();
    let a = run_grid::<f64>(&spec, &monthly).unwrap();
    let b = run_grid::<f64>(&spec, &monthly).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.records.len(), 4 * 2 * 2 * 2 * 3);
    for r in &a.records {
        if let Some(c) = r.coarse_accuracy {
            assert!(c >= r.accuracy, "{}", r.key);
        }
        assert!(r.test_block < a.n_blocks);
    }
}

#[test]
fn full_grid_has_720_cells_per_pair() {
    let spec = GridSpec::default();
    let (planned, skipped) = plan_grid(&spec, spec.windows.iter().max().unwrap() + spec.horizons.iter().max().unwrap() + spec.shifts);
    assert!(skipped.is_empty());
    let mut per_pair: BTreeMap<(Task, ModelKind), usize> = BTreeMap::new();
    for c in &planned {
        *per_pair.entry((c.key.task, c.key.model)).or_default() += 1;
    }
    assert_eq!(per_pair.len(), 4 * 4);
    assert!(per_pair.values().all(|&n| n == 10 * 6 * 12));
}
