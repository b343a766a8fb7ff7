mod common;

use maintcast::depgraph::{pagerank, DependencyGraph, PageRankParams};
use proptest::prelude::*;

fn name(i: usize) -> String {
    format!("n{i:02}")
}

fn graph<T: maintcast::Real>(n: usize, edges: &[(usize, usize)]) -> DependencyGraph<T> {
    let names: Vec<String> = (0..n).map(name).collect();
    let named: Vec<(String, String)> = edges.iter().map(|&(a, b)| (name(a), name(b))).collect();
    DependencyGraph::from_edges(
        names.iter().map(String::as_str),
        named.iter().map(|(a, b)| (a.as_str(), b.as_str())),
    )
}

fn tight() -> PageRankParams<f64> {
    PageRankParams {
        tol: 1e-15,
        max_iter: 10_000,
        ..PageRankParams::default()
    }
}

fn ranks(n: usize, edges: &[(usize, usize)], params: &PageRankParams<f64>) -> Vec<f64> {
    let out = pagerank(graph::<f64>(n, edges), params).unwrap();
    // zero-padded names keep node order equal to index order
    out.graph.pagerank.unwrap()
}

#[test]
fn rings_are_uniform() {
    for n in 2..=60 {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        for r in ranks(n, &edges, &PageRankParams::default()) {
            assert!((r - 1.0 / n as f64).abs() <= 1e-10, "ring {n}: {r}");
        }
    }
}

#[test]
fn star_into_hub() {
    // every leaf points at the hub, which is dangling
    let edges: Vec<_> = (1..5).map(|i| (i, 0)).collect();
    let r = ranks(5, &edges, &tight());
    let oracle = common::dense_pagerank(5, &edges, 0.85);
    for (a, b) in r.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert!(r[0] > r[1]);
}

fn arb_edges(n: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..n, 0..n), 0..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ten_node_graphs_match_dense_oracle(edges in arb_edges(10)) {
        let r = ranks(10, &edges, &tight());
        let oracle = common::dense_pagerank(10, &edges, 0.85);
        for (a, b) in r.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn default_ranks_sum_to_one(edges in arb_edges(25)) {
        let r = ranks(25, &edges, &PageRankParams::default());
        let total: f64 = r.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        prop_assert!(r.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn relabeling_permutes_ranks(edges in arb_edges(10), perm in Just((0..10).collect::<Vec<usize>>()).prop_shuffle()) {
        let r = ranks(10, &edges, &tight());
        let moved: Vec<_> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        let rp = ranks(10, &moved, &tight());
        for i in 0..10 {
            prop_assert!((r[i] - rp[perm[i]]).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_precision_tracks_double(edges in arb_edges(10)) {
        let r64 = ranks(10, &edges, &PageRankParams::default());
        let r32 = pagerank(graph::<f32>(10, &edges), &PageRankParams::default()).unwrap().graph.pagerank.unwrap();
        for (a, b) in r64.iter().zip(&r32) {
            prop_assert!((a - *b as f64).abs() <= 1e-5);
        }
    }
}
