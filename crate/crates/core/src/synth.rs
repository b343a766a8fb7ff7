//! Synthetic repositories with controllable maintenance regimes.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{ActivityEvent, Corpus, DependencySnapshot, EventKind, RepoMetadata, Role};
use crate::period::Period;
use crate::seed;

/// Shortest span that covers the availability gate and one monthly block.
pub const MIN_DAYS: usize = 120;

const AUTHOR_POOL: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    /// Evenly spaced commits that hold the score at `level`.
    Persistent { level: u8 },
    /// Activity starting at score level `start` whose rate halves every `half_life_days`.
    Decaying { start: f64, half_life_days: f64 },
    /// Daily Poisson activity at `base_rate`, or `burst_rate` with probability `burst_prob`.
    Bursty { base_rate: f64, burst_rate: f64, burst_prob: f64 },
    /// A commit every six days for `active_days`, then silence.
    Abandoned { active_days: usize },
    /// Daily Poisson activity of mixed kinds and roles.
    Noise { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub repo_id: String,
    pub regime: Regime,
    pub seed: u64,
    pub created_on: NaiveDate,
    pub archived_on: Option<NaiveDate>,
    /// Days of activity starting at `created_on`.
    pub n_days: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid regime for {repo}: {reason}")]
    InvalidSpec { repo: String, reason: String },
    #[error("no regimes given")]
    Empty,
}

impl RegimeSpec {
    pub fn new(repo_id: impl Into<String>, regime: Regime, seed: u64, created_on: NaiveDate, n_days: usize) -> Self {
        Self {
            repo_id: repo_id.into(),
            regime,
            seed,
            created_on,
            archived_on: None,
            n_days,
        }
    }

    pub fn last_day(&self) -> NaiveDate {
        self.created_on + Duration::days(self.n_days as i64 - 1)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |reason: String| {
            Err(SynthError::InvalidSpec {
                repo: self.repo_id.clone(),
                reason,
            })
        };
        if self.repo_id.trim().is_empty() {
            return bad("empty repository id".into());
        }
        if self.n_days < MIN_DAYS {
            return bad(format!("{} days is shorter than {MIN_DAYS}", self.n_days));
        }
        if self.archived_on.is_some_and(|a| a < self.created_on) {
            return bad("archived before creation".into());
        }
        let rate_ok = |r: f64| r >= 0.0 && r.is_finite();
        match self.regime {
            Regime::Persistent { level } if level > 10 => bad(format!("level {level} outside 0..10")),
            Regime::Decaying { start, half_life_days } if !rate_ok(start) || !(half_life_days > 0.0) => {
                bad("decay needs a non-negative start and a positive half-life".into())
            }
            Regime::Bursty {
                base_rate,
                burst_rate,
                burst_prob,
            } if !rate_ok(base_rate) || !rate_ok(burst_rate) || !(0.0..=1.0).contains(&burst_prob) => {
                bad("burst rates must be non-negative and the probability in [0, 1]".into())
            }
            Regime::Noise { rate } if !rate_ok(rate) => bad("noise rate must be non-negative".into()),
            _ => Ok(()),
        }
    }
}

/// Commits per 90-day window that reproduce a score `level`.
pub fn persistent_window_count(level: u8) -> u32 {
    (level as f64 * (90.0 / 7.0) / 10.0).round() as u32
}

fn author(repo: &str, k: u64) -> String {
    format!("{repo}-dev{}", k % AUTHOR_POOL)
}

/// One repository's metadata and events, deterministic in the spec.
pub fn generate_repo_activity(spec: &RegimeSpec) -> Result<(RepoMetadata, Vec<ActivityEvent>), SynthError> {
    spec.validate()?;
    let repo = spec.repo_id.as_str();
    let last = match spec.archived_on {
        Some(a) => a.min(spec.last_day()),
        None => spec.last_day(),
    };
    let n = ((last - spec.created_on).num_days() + 1).max(0) as usize;
    let day = |d: usize| spec.created_on + Duration::days(d as i64);
    let mut rng = seed::rng(spec.seed);
    let mut events = Vec::new();

    match spec.regime {
        Regime::Persistent { level } => {
            let k = persistent_window_count(level) as usize;
            let offsets: Vec<usize> = (0..k).map(|j| j * 90 / k.max(1)).collect();
            let mut count = 0u64;
            for start in (0..n).step_by(90) {
                for &o in &offsets {
                    if start + o < n {
                        events.push(ActivityEvent::commit(repo, day(start + o)).by(author(repo, count)));
                        count += 1;
                    }
                }
            }
        }
        Regime::Decaying { start, half_life_days } => {
            let mut cumulative = 0.0_f64;
            let mut emitted = 0u64;
            for d in 0..n {
                cumulative += start / 70.0 * (-(d as f64) / half_life_days).exp2();
                while (emitted as f64) + 1.0 <= cumulative + 1e-9 {
                    events.push(ActivityEvent::commit(repo, day(d)).by(author(repo, emitted)));
                    emitted += 1;
                }
            }
        }
        Regime::Bursty {
            base_rate,
            burst_rate,
            burst_prob,
        } => {
            for d in 0..n {
                let rate = if rng.random::<f64>() < burst_prob { burst_rate } else { base_rate };
                let count = draw_poisson(&mut rng, rate);
                for _ in 0..count {
                    events.push(mixed_event(&mut rng, repo, day(d), true));
                }
            }
        }
        Regime::Abandoned { active_days } => {
            for d in (0..n.min(active_days)).step_by(6) {
                events.push(ActivityEvent::commit(repo, day(d)).by(author(repo, d as u64 / 6)));
            }
        }
        Regime::Noise { rate } => {
            for d in 0..n {
                for _ in 0..draw_poisson(&mut rng, rate) {
                    events.push(mixed_event(&mut rng, repo, day(d), false));
                }
            }
        }
    }
    let meta = RepoMetadata {
        repo_id: spec.repo_id.clone(),
        created_on: spec.created_on,
        archived_on: spec.archived_on,
        url: format!("https://example.org/synthetic/{repo}"),
    };
    Ok((meta, events))
}

fn draw_poisson(rng: &mut impl Rng, rate: f64) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Commits and issue activity; `core_only` keeps issue authors in core roles.
fn mixed_event(rng: &mut impl Rng, repo: &str, date: NaiveDate, core_only: bool) -> ActivityEvent {
    let who = author(repo, rng.random_range(0..AUTHOR_POOL));
    match rng.random_range(0..3) {
        0 => ActivityEvent::commit(repo, date).by(who),
        k => {
            let kind = if k == 1 { EventKind::IssueCreated } else { EventKind::IssueComment };
            let roles: &[Role] = if core_only {
                &[Role::Owner, Role::Member, Role::Collaborator]
            } else {
                &[Role::Owner, Role::Member, Role::Collaborator, Role::Other]
            };
            let role = roles[rng.random_range(0..roles.len())];
            ActivityEvent::issue(repo, kind, date, role).by(who)
        }
    }
}

/// Corpus over the union of all spans. Repositories are generated independently.
pub fn generate_corpus(specs: &[RegimeSpec]) -> Result<Corpus, SynthError> {
    if specs.is_empty() {
        return Err(SynthError::Empty);
    }
    let generated: Vec<_> = specs.par_iter().map(generate_repo_activity).collect::<Result<_, _>>()?;
    let start = specs.iter().map(|s| s.created_on).min().expect("non-empty");
    let end = specs.iter().map(RegimeSpec::last_day).max().expect("non-empty");
    let period = Period::new(start, end).expect("spans end after they start");
    let mut meta = BTreeMap::new();
    let mut events = Vec::new();
    for (m, ev) in generated {
        if meta.insert(m.repo_id.clone(), m).is_some() {
            return Err(SynthError::InvalidSpec {
                repo: ev.first().map(|e| e.repo_id.clone()).unwrap_or_default(),
                reason: "duplicate repository id".into(),
            });
        }
        events.extend(ev);
    }
    Ok(Corpus::assemble(meta, events, period).expect("events belong to generated repositories"))
}

/// Regime family of a preset repository, read from its id prefix.
pub fn family_of(repo_id: &str) -> &str {
    repo_id.split('-').next().unwrap_or(repo_id)
}

/// `n_persistent` repositories cycling through levels 1..9, `n_decaying`
/// decaying from levels 8..10 and `n_bursty` bursty ones, all created on
/// `created_on` and active for `n_days`.
pub fn regime_mix(
    n_persistent: usize,
    n_decaying: usize,
    n_bursty: usize,
    base_seed: u64,
    created_on: NaiveDate,
    n_days: usize,
) -> Vec<RegimeSpec> {
    let mut out = Vec::with_capacity(n_persistent + n_decaying + n_bursty);
    for i in 0..n_persistent {
        let level = (i % 9) as u8 + 1;
        out.push(RegimeSpec::new(
            format!("persistent-{i:03}"),
            Regime::Persistent { level },
            seed::derive(base_seed, &[0, i as u64]),
            created_on,
            n_days,
        ));
    }
    for i in 0..n_decaying {
        out.push(RegimeSpec::new(
            format!("decaying-{i:03}"),
            Regime::Decaying {
                start: 8.0 + (i % 3) as f64,
                half_life_days: 150.0 + 45.0 * (i % 7) as f64,
            },
            seed::derive(base_seed, &[1, i as u64]),
            created_on,
            n_days,
        ));
    }
    for i in 0..n_bursty {
        out.push(RegimeSpec::new(
            format!("bursty-{i:03}"),
            Regime::Bursty {
                base_rate: 0.02 + 0.01 * (i % 4) as f64,
                burst_rate: 0.8 + 0.3 * (i % 3) as f64,
                burst_prob: 0.03 + 0.01 * (i % 5) as f64,
            },
            seed::derive(base_seed, &[2, i as u64]),
            created_on,
            n_days,
        ));
    }
    out
}

/// A rough mix of every regime, including abandoned and archived repositories.
pub fn mixed_preset(n: usize, base_seed: u64, created_on: NaiveDate, n_days: usize) -> Vec<RegimeSpec> {
    (0..n)
        .map(|i| {
            let s = seed::derive(base_seed, &[9, i as u64]);
            let mut spec = match i % 6 {
                0 | 1 => RegimeSpec::new(
                    format!("persistent-{i:03}"),
                    Regime::Persistent { level: (s % 11) as u8 },
                    s,
                    created_on,
                    n_days,
                ),
                2 => RegimeSpec::new(
                    format!("decaying-{i:03}"),
                    Regime::Decaying {
                        start: 10.0,
                        half_life_days: 200.0,
                    },
                    s,
                    created_on,
                    n_days,
                ),
                3 => RegimeSpec::new(
                    format!("bursty-{i:03}"),
                    Regime::Bursty {
                        base_rate: 0.03,
                        burst_rate: 1.0,
                        burst_prob: 0.05,
                    },
                    s,
                    created_on,
                    n_days,
                ),
                4 => RegimeSpec::new(
                    format!("abandoned-{i:03}"),
                    Regime::Abandoned { active_days: n_days / 2 },
                    s,
                    created_on,
                    n_days,
                ),
                _ => RegimeSpec::new(format!("noise-{i:03}"), Regime::Noise { rate: 0.15 }, s, created_on, n_days),
            };
            if i % 12 == 5 {
                spec.archived_on = Some(created_on + Duration::days((n_days * 3 / 4) as i64));
            }
            spec
        })
        .collect()
}

/// Library of a synthetic repository.
pub fn library_of(repo_id: &str) -> String {
    format!("lib-{repo_id}")
}

/// Synthetic dependency snapshot over one library per repository. Library `i`
/// depends on up to `edges_per_library` distinct others, chosen with a bias
/// toward low indices so that a few libraries gather most of the rank.
pub fn synthetic_dependencies(repo_ids: &[String], edges_per_library: usize, base_seed: u64) -> DependencySnapshot {
    let libs: Vec<String> = repo_ids.iter().map(|r| library_of(r)).collect();
    let n = libs.len();
    let mut snap = DependencySnapshot::default();
    for (i, lib) in libs.iter().enumerate() {
        snap.libraries.insert(lib.clone());
        snap.library_to_repo.insert(lib.clone(), Some(repo_ids[i].clone()));
        let mut rng = seed::rng(seed::derive(base_seed, &[5, i as u64]));
        let mut picked = BTreeSet::new();
        let want = edges_per_library.min(n.saturating_sub(1));
        while picked.len() < want {
            let u: f64 = rng.random();
            let j = ((u * u) * n as f64) as usize;
            if j != i {
                picked.insert(j.min(n - 1));
            }
        }
        for j in picked {
            snap.edges.push((lib.clone(), libs[j].clone()));
        }
    }
    snap
}

/// `dependent,dependency` and `library,repo` CSV texts of a snapshot.
pub fn dependency_csvs(snap: &DependencySnapshot) -> (String, String) {
    let mut edges = String::from("dependent,dependency\n");
    for (a, b) in &snap.edges {
        edges.push_str(&format!("{a},{b}\n"));
    }
    let mut map = String::from("library,repo\n");
    for (lib, repo) in &snap.library_to_repo {
        map.push_str(&format!("{lib},{}\n", repo.as_deref().unwrap_or("")));
    }
    (edges, map)
}
