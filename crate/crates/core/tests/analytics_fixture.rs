mod common;

use maintcast::analytics::{
    contributor_stability, mean_interactivity_days, monthly_contributor_jaccard, repo_month_jaccard, ActivityKind,
    AnalyticsError,
};
use maintcast::ingest::{ActivityEvent, Corpus, RepoMetadata};
use maintcast::Period;

#[test]
fn interval_means_match_hand_values() {
    let corpus = common::five_repo_fixture();
    let s = mean_interactivity_days(&corpus, 2022);
    // commit gaps a 30, b 15, c 30, e 30; issue gaps b 10, c 25
    assert_eq!(s.mean_commit_gap_days, 26.25);
    assert_eq!(s.active_commit_repos, 4);
    assert_eq!(s.mean_issue_gap_days, 17.5);
    assert_eq!(s.active_issue_repos, 2);
    assert_eq!(s.overall_mean, 21.875);
}

#[test]
fn jaccard_means_match_hand_values() {
    let corpus = common::five_repo_fixture();
    let per_repo = |id: &str, kind| repo_month_jaccard(&corpus.repos[id].events, 2022, kind).unwrap();
    assert_eq!(per_repo("a", ActivityKind::Commit), None);
    assert_eq!(per_repo("b", ActivityKind::Commit), Some(1.0 / 3.0));
    assert_eq!(per_repo("c", ActivityKind::Commit), Some(0.5 / 3.0));
    assert_eq!(per_repo("d", ActivityKind::Commit), None);
    assert_eq!(per_repo("e", ActivityKind::Commit), Some(0.25));
    assert_eq!(per_repo("c", ActivityKind::Issue), Some(0.5 / 3.0));
    assert_eq!(per_repo("b", ActivityKind::Issue), None);

    let s = contributor_stability(&corpus, 2022).unwrap();
    // (1/3 + 1/6 + 1/4) / 3
    assert!((s.mean_commit_jaccard - 0.25).abs() <= 1e-15, "{}", s.mean_commit_jaccard);
    assert_eq!(s.active_commit_repos, 3);
    assert_eq!(s.mean_issue_jaccard, 0.5 / 3.0);
    assert_eq!(s.active_issue_repos, 1);
    assert_eq!(
        monthly_contributor_jaccard(&corpus, 2022, ActivityKind::Issue).unwrap(),
        (0.5 / 3.0, 1)
    );
}

#[test]
fn other_years_are_empty() {
    let corpus = common::five_repo_fixture();
    let s = mean_interactivity_days(&corpus, 2021);
    assert_eq!((s.active_commit_repos, s.active_issue_repos, s.overall_mean), (0, 0, 0.0));
}

#[test]
fn missing_identities_are_reported() {
    let day = |s: &str| s.parse().unwrap();
    let meta = RepoMetadata {
        repo_id: "r".into(),
        created_on: day("2020-01-01"),
        archived_on: None,
        url: String::new(),
    };
    let events = vec![ActivityEvent::commit("r", day("2022-02-01"))];
    let corpus = Corpus::assemble(
        [("r".to_string(), meta)].into_iter().collect(),
        events,
        Period::new(day("2022-01-01"), day("2022-12-31")).unwrap(),
    )
    .unwrap();
    assert_eq!(
        contributor_stability(&corpus, 2022),
        Err(AnalyticsError::MissingAuthorField("r".into()))
    );
}
