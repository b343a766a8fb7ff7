//! Independent reference implementations used as test oracles. They favour
//! directness over speed and share no code with the library.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate};
use maintcast::ingest::{ActivityEvent, EventKind, RepoMetadata, Role};

pub struct NaiveScores {
    pub commit_sum: Vec<u32>,
    pub issue_sum: Vec<u32>,
    pub score: Vec<u8>,
}

/// Re-sums the trailing 90 days for every day and evaluates
/// `min(10, round(10 * S / (90 / 7)))` with round-half-up on integers.
pub fn naive_scores(meta: &RepoMetadata, events: &[ActivityEvent], start: NaiveDate, end: NaiveDate) -> NaiveScores {
    let mut commits: BTreeMap<NaiveDate, u32> = BTreeMap::new();
    let mut issue_days: BTreeSet<(NaiveDate, &'static str, &'static str)> = BTreeSet::new();
    for ev in events {
        match ev.kind {
            EventKind::Commit => *commits.entry(ev.date).or_default() += 1,
            _ => {
                if matches!(ev.author_role, Role::Owner | Role::Member | Role::Collaborator) {
                    issue_days.insert((ev.date, ev.author_role.as_str(), ev.kind.as_str()));
                }
            }
        }
    }
    let mut issues: BTreeMap<NaiveDate, u32> = BTreeMap::new();
    for (day, _, _) in &issue_days {
        *issues.entry(*day).or_default() += 1;
    }
    let mut out = NaiveScores {
        commit_sum: Vec::new(),
        issue_sum: Vec::new(),
        score: Vec::new(),
    };
    let mut t = start;
    while t <= end {
        let from = t - Duration::days(89);
        let mut c = 0;
        let mut i = 0;
        let mut d = from;
        while d <= t {
            c += commits.get(&d).copied().unwrap_or(0);
            i += issues.get(&d).copied().unwrap_or(0);
            d += Duration::days(1);
        }
        let gated = t >= meta.created_on + Duration::days(90) && meta.archived_on.is_none_or(|a| t <= a);
        let s = (c + i) as u64;
        // 10 * s * 7 / 90 rounded half up: floor((140 s + 90) / 180)
        let score = if gated { ((140 * s + 90) / 180).min(10) as u8 } else { 0 };
        out.commit_sum.push(c);
        out.issue_sum.push(i);
        out.score.push(score);
        t += Duration::days(1);
    }
    out
}

/// Dense power iteration on the full Google matrix; dangling columns spread
/// uniformly. Iterates to machine precision.
pub fn dense_pagerank(n: usize, edges: &[(usize, usize)], damping: f64) -> Vec<f64> {
    let mut m = vec![vec![0.0; n]; n];
    let mut outdeg = vec![0usize; n];
    let mut set = BTreeSet::new();
    for &(a, b) in edges {
        if a != b && set.insert((a, b)) {
            outdeg[a] += 1;
        }
    }
    for j in 0..n {
        for i in 0..n {
            m[i][j] = if outdeg[j] == 0 {
                1.0 / n as f64
            } else if set.contains(&(j, i)) {
                1.0 / outdeg[j] as f64
            } else {
                0.0
            };
        }
    }
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..n)
            .map(|i| (1.0 - damping) / n as f64 + damping * (0..n).map(|j| m[i][j] * r[j]).sum::<f64>())
            .collect();
        let diff: f64 = next.iter().zip(&r).map(|(a, b)| (a - b).abs()).sum();
        r = next;
        if diff < 1e-15 {
            break;
        }
    }
    r
}

/// Most frequent label by explicit counting, smallest label on ties.
pub fn brute_majority(labels: &[i64]) -> Option<i64> {
    let mut best: Option<(i64, usize)> = None;
    for &candidate in labels {
        let count = labels.iter().filter(|&&l| l == candidate).count();
        best = match best {
            None => Some((candidate, count)),
            Some((b, bc)) if count > bc || (count == bc && candidate < b) => Some((candidate, count)),
            keep => keep,
        };
    }
    best.map(|(l, _)| l)
}

/// A window of `t` input blocks ending at `last` with its target `h` blocks
/// later leaks into `test` when any of those blocks is at or after `test`.
pub fn placement_leaks(last: usize, t: usize, h: usize, test: usize) -> bool {
    let first = last + 1 - t;
    (first..=last).any(|b| b >= test) || last + h >= test
}

/// Bucket table: low 0..=2, moderate 3..=7, high 8..=10.
pub fn bucket_code(score: i64) -> i64 {
    match score {
        0..=2 => 0,
        3..=7 => 1,
        _ => 2,
    }
}

/// Five repositories over 2022 with every gap and Jaccard value worked out by
/// hand; see `analytics_fixture.rs` for the expected numbers.
pub fn five_repo_fixture() -> maintcast::ingest::Corpus {
    use maintcast::ingest::Corpus;
    use maintcast::Period;

    fn day(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }
    fn commit(repo: &str, date: &str, who: &str) -> ActivityEvent {
        ActivityEvent::commit(repo, day(date)).by(who)
    }
    fn issue(repo: &str, kind: EventKind, date: &str, role: Role, who: &str) -> ActivityEvent {
        ActivityEvent::issue(repo, kind, day(date), role).by(who)
    }
    use EventKind::{IssueComment as Comment, IssueCreated as Opened};

    let events = vec![
        // A: commit days Jan 1, Jan 31, Mar 2 (gap 60 / 2 = 30); no two
        // consecutive active months; a single core issue day
        commit("a", "2022-01-01", "a1"),
        commit("a", "2022-01-01", "a3"),
        commit("a", "2022-01-31", "a1"),
        commit("a", "2022-03-02", "a2"),
        issue("a", Comment, "2022-05-10", Role::Owner, "a1"),
        issue("a", Comment, "2022-05-20", Role::Other, "z"),
        // B: commit days Feb 1, Feb 16, Mar 3 (30 / 2 = 15); Feb {x,y}, Mar {x,y}
        // gives pairs 0, 1, 0; core issue days Feb 1, Feb 11 (gap 10)
        commit("b", "2022-02-01", "x"),
        commit("b", "2022-02-16", "y"),
        commit("b", "2022-03-03", "x"),
        commit("b", "2022-03-03", "y"),
        issue("b", Opened, "2022-02-01", Role::Member, "m"),
        issue("b", Comment, "2022-02-11", Role::Collaborator, "n"),
        // C: commit days Jun 1, Jul 1 (30); Jun {a,b,c}, Jul {b,c,d} gives
        // pairs 0, 1/2, 0; core issue days Jun 5, Jul 5, Jul 25 (50 / 2 = 25),
        // Jun {p}, Jul {p,q} gives pairs 0, 1/2, 0
        commit("c", "2022-06-01", "a"),
        commit("c", "2022-06-01", "b"),
        commit("c", "2022-06-01", "c"),
        commit("c", "2022-07-01", "b"),
        commit("c", "2022-07-01", "c"),
        commit("c", "2022-07-01", "d"),
        issue("c", Comment, "2022-06-05", Role::Owner, "p"),
        issue("c", Opened, "2022-07-05", Role::Owner, "p"),
        issue("c", Comment, "2022-07-25", Role::Owner, "q"),
        // D: one commit day in 2022, one in 2021
        commit("d", "2021-12-31", "a"),
        commit("d", "2022-04-04", "a"),
        // E: commit days Nov 1, Dec 1, Dec 31 (60 / 2 = 30); Nov {u}, Dec {u,v}
        // gives pairs 0, 1/2; issue activity only from non-core roles
        commit("e", "2022-11-01", "u"),
        commit("e", "2022-12-01", "u"),
        commit("e", "2022-12-31", "v"),
        issue("e", Comment, "2022-11-02", Role::Other, "w"),
        issue("e", Comment, "2022-11-09", Role::Other, "w"),
    ];
    let meta = ["a", "b", "c", "d", "e"]
        .into_iter()
        .map(|id| {
            (
                id.to_string(),
                RepoMetadata {
                    repo_id: id.into(),
                    created_on: day("2020-01-01"),
                    archived_on: None,
                    url: String::new(),
                },
            )
        })
        .collect();
    let period = Period::new(day("2022-01-01"), day("2022-12-31")).unwrap();
    Corpus::assemble(meta, events, period).unwrap()
}

/// 100 repositories of every regime with staggered creation dates, some
/// created inside the period and some archived.
pub fn hundred_repo_corpus() -> maintcast::ingest::Corpus {
    use maintcast::synth::{self, RegimeSpec};
    let d = |s: &str| s.parse::<NaiveDate>().unwrap();
    let base = d("2020-06-01");
    let end = d("2023-12-31");
    let specs: Vec<RegimeSpec> = synth::mixed_preset(100, 11, base, 400)
        .into_iter()
        .enumerate()
        .map(|(i, mut s)| {
            s.created_on = base + Duration::days(9 * i as i64);
            s.n_days = (end - s.created_on).num_days() as usize + 1;
            if s.archived_on.is_some() {
                s.archived_on = Some(s.created_on + Duration::days(200 + 3 * i as i64));
            }
            s
        })
        .collect();
    let period = maintcast::Period::new(d("2021-01-01"), d("2023-12-31")).unwrap();
    synth::generate_corpus(&specs).unwrap().restrict(period)
}
