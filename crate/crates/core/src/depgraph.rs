//! Library dependency graph, PageRank importance and top-fraction selection.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::DependencySnapshot;
use crate::scalar::Real;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DepGraphError {
    #[error("no library has a repository link")]
    EmptySelection,
    #[error("selection fraction {0} outside (0, 1]")]
    InvalidFraction(f64),
    #[error("damping must lie in (0, 1) and tolerance must be positive")]
    InvalidParams,
    #[error("pagerank has not been computed")]
    MissingPageRank,
}

/// Nodes are kept sorted by name, so the graph does not depend on input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph<T> {
    pub nodes: Vec<String>,
    /// `out_edges[i]` lists the targets of node `i`, sorted and unique.
    pub out_edges: Vec<Vec<usize>>,
    pub pagerank: Option<Vec<T>>,
}

impl<T: Real> DependencyGraph<T> {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn rank_of(&self, name: &str) -> Option<T> {
        let i = self.index_of(name)?;
        self.pagerank.as_ref().map(|pr| pr[i])
    }

    /// Builds a graph from explicit nodes and `(from, to)` edges.
    pub fn from_edges<'a>(
        nodes: impl IntoIterator<Item = &'a str>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Self {
        let edges: Vec<(&str, &str)> = edges.into_iter().collect();
        let names: BTreeSet<&str> = nodes
            .into_iter()
            .chain(edges.iter().flat_map(|&(a, b)| [a, b]))
            .collect();
        let nodes: Vec<String> = names.into_iter().map(str::to_string).collect();
        let index: BTreeMap<&str, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nodes.len()];
        for (a, b) in edges {
            if a != b {
                out[index[a]].insert(index[b]);
            }
        }
        let out_edges = out.into_iter().map(|s| s.into_iter().collect()).collect();
        Self {
            nodes,
            out_edges,
            pagerank: None,
        }
    }
}

/// Graph over every library in the snapshot, edges dependent → dependency
/// (or the reverse when `reverse` is set).
pub fn build_dependency_graph<T: Real>(snapshot: &DependencySnapshot, reverse: bool) -> DependencyGraph<T> {
    let edges = snapshot.edges.iter().map(|(a, b)| {
        if reverse {
            (b.as_str(), a.as_str())
        } else {
            (a.as_str(), b.as_str())
        }
    });
    DependencyGraph::from_edges(snapshot.libraries.iter().map(String::as_str), edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams<T> {
    pub damping: T,
    /// L1 change threshold between iterates.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for PageRankParams<T> {
    fn default() -> Self {
        Self {
            damping: T::of(0.85),
            tol: T::of(1e-8),
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankOutcome<T> {
    pub graph: DependencyGraph<T>,
    pub iterations: usize,
    pub converged: bool,
}

const PARALLEL_THRESHOLD: usize = 4096;

/// Power iteration with uniform teleportation; dangling nodes spread their
/// mass uniformly. Non-convergence is logged and the last iterate returned.
pub fn pagerank<T: Real>(
    mut graph: DependencyGraph<T>,
    params: &PageRankParams<T>,
) -> Result<PageRankOutcome<T>, DepGraphError> {
    let d = params.damping;
    if !(d > T::zero() && d < T::one()) || !(params.tol > T::zero()) {
        return Err(DepGraphError::InvalidParams);
    }
    let n = graph.node_count();
    if n == 0 {
        graph.pagerank = Some(Vec::new());
        return Ok(PageRankOutcome {
            graph,
            iterations: 0,
            converged: true,
        });
    }
    let nf = T::of_usize(n);
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, outs) in graph.out_edges.iter().enumerate() {
        for &j in outs {
            incoming[j].push(i);
        }
    }
    let inv_deg: Vec<T> = graph
        .out_edges
        .iter()
        .map(|o| if o.is_empty() { T::zero() } else { T::one() / T::of_usize(o.len()) })
        .collect();
    let dangling: Vec<usize> = (0..n).filter(|&i| graph.out_edges[i].is_empty()).collect();

    let mut rank = vec![T::one() / nf; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        iterations += 1;
        let dangling_mass: T = dangling.iter().map(|&i| rank[i]).sum();
        let base = (T::one() - d) / nf + d * dangling_mass / nf;
        let pull = |j: usize| -> T {
            let flow: T = incoming[j].iter().map(|&i| rank[i] * inv_deg[i]).sum();
            base + d * flow
        };
        let next: Vec<T> = if n >= PARALLEL_THRESHOLD {
            (0..n).into_par_iter().map(pull).collect()
        } else {
            (0..n).map(pull).collect()
        };
        let change: T = next.iter().zip(&rank).map(|(a, b)| (*a - *b).abs()).sum();
        rank = next;
        if change < params.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("pagerank did not converge within {} iterations", params.max_iter);
    }
    let total: T = rank.iter().copied().sum();
    rank.iter_mut().for_each(|r| *r /= total);
    graph.pagerank = Some(rank);
    Ok(PageRankOutcome {
        graph,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selected<T> {
    pub library: String,
    pub repo_id: String,
    pub pagerank: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult<T> {
    pub selected: Vec<Selected<T>>,
    pub fraction: f64,
    /// Libraries skipped during the walk because they have no repository link.
    pub excluded_no_repo: usize,
}

impl<T> SelectionResult<T> {
    /// Distinct repositories in rank order.
    pub fn repositories(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.selected
            .iter()
            .filter(|s| seen.insert(s.repo_id.as_str()))
            .map(|s| s.repo_id.as_str())
            .collect()
    }
}

/// Number of libraries kept for `fraction` of `linked` libraries.
pub fn selection_size(fraction: f64, linked: usize) -> usize {
    // guard against 0.07 * 100 = 7.000000000000001
    ((fraction * linked as f64) - 1e-9).ceil().max(0.0) as usize
}

pub fn select_top_fraction<T: Real>(
    graph: &DependencyGraph<T>,
    snapshot: &DependencySnapshot,
    fraction: f64,
) -> Result<SelectionResult<T>, DepGraphError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DepGraphError::InvalidFraction(fraction));
    }
    let ranks = graph.pagerank.as_ref().ok_or(DepGraphError::MissingPageRank)?;
    let linked = graph.nodes.iter().filter(|n| snapshot.repo_of(n).is_some()).count();
    if linked == 0 {
        return Err(DepGraphError::EmptySelection);
    }
    let keep = selection_size(fraction, linked);
    let mut order: Vec<usize> = (0..graph.node_count()).collect();
    order.sort_by(|&a, &b| {
        ranks[b]
            .partial_cmp(&ranks[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| graph.nodes[a].cmp(&graph.nodes[b]))
    });
    let mut selected = Vec::with_capacity(keep);
    let mut excluded_no_repo = 0;
    for i in order {
        if selected.len() == keep {
            break;
        }
        match snapshot.repo_of(&graph.nodes[i]) {
            Some(repo) => selected.push(Selected {
                library: graph.nodes[i].clone(),
                repo_id: repo.to_string(),
                pagerank: ranks[i],
            }),
            None => excluded_no_repo += 1,
        }
    }
    Ok(SelectionResult {
        selected,
        fraction,
        excluded_no_repo,
    })
}
