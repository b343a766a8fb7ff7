//! Random forest regressor: bootstrap-aggregated CART trees grown with
//! squared-error splits over every feature.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub bootstrap: bool,
    pub aggregation: Aggregation,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            bootstrap: true,
            aggregation: Aggregation::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node<T> {
    Leaf(T),
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Real> RegressionTree<T> {
    pub fn predict_row(&self, row: &[T]) -> T {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Exact CART growth. Each feature keeps the node's samples in sorted order;
/// a split stably partitions every feature's segment, so no node re-sorts.
struct Builder<'a, T> {
    /// Feature value of sample `i` (a position in the bootstrap draw) is
    /// `x.get(rows[i], feature)`.
    x: &'a Matrix<T>,
    y: Vec<T>,
    rows: Vec<usize>,
    orders: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    params: &'a ForestParams,
    nodes: Vec<Node<T>>,
}

struct BestSplit<T> {
    feature: usize,
    threshold: T,
    score: T,
    left_count: usize,
}

impl<'a, T: Real> Builder<'a, T> {
    fn new(x: &'a Matrix<T>, y: &[T], rows: &[usize], params: &'a ForestParams) -> Self {
        let m = rows.len();
        let orders = (0..x.cols)
            .map(|f| {
                let mut o: Vec<u32> = (0..m as u32).collect();
                o.sort_by(|&a, &b| {
                    x.get(rows[a as usize], f)
                        .partial_cmp(&x.get(rows[b as usize], f))
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                o
            })
            .collect();
        Self {
            x,
            y: rows.iter().map(|&r| y[r]).collect(),
            rows: rows.to_vec(),
            orders,
            goes_left: vec![false; m],
            scratch: Vec::with_capacity(m),
            params,
            nodes: Vec::new(),
        }
    }

    fn value(&self, i: u32, feature: usize) -> T {
        self.x.get(self.rows[i as usize], feature)
    }

    /// Maximizes `sum_l^2 / n_l + sum_r^2 / n_r`, which is the same as
    /// minimizing the children's summed squared error.
    fn best_split(&self, lo: usize, hi: usize, total: T) -> Option<BestSplit<T>> {
        let n = hi - lo;
        let mut best: Option<BestSplit<T>> = None;
        for feature in 0..self.x.cols {
            let order = &self.orders[feature][lo..hi];
            let mut left_sum = T::zero();
            let mut a = self.value(order[0], feature);
            for k in 0..n - 1 {
                left_sum += self.y[order[k] as usize];
                let b = self.value(order[k + 1], feature);
                if a < b {
                    let nl = T::of_usize(k + 1);
                    let nr = T::of_usize(n - k - 1);
                    let right_sum = total - left_sum;
                    let score = left_sum * left_sum / nl + right_sum * right_sum / nr;
                    if best.as_ref().is_none_or(|s| score > s.score) {
                        let mut threshold = (a + b) / T::of(2.0);
                        if !(threshold < b) {
                            threshold = a;
                        }
                        best = Some(BestSplit {
                            feature,
                            threshold,
                            score,
                            left_count: k + 1,
                        });
                    }
                }
                a = b;
            }
        }
        best
    }

    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(T::zero()));
        let members = &self.orders[0][lo..hi];
        let first = self.y[members[0] as usize];
        let pure = members.iter().all(|&i| self.y[i as usize] == first);
        let total: T = members.iter().map(|&i| self.y[i as usize]).sum();
        let n = hi - lo;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        let split = if pure || depth_capped || n < self.params.min_samples_split.max(2) {
            None
        } else {
            self.best_split(lo, hi, total)
        };
        let Some(s) = split else {
            self.nodes[id] = Node::Leaf(total / T::of_usize(n));
            return id;
        };
        let mid = lo + s.left_count;
        for (k, &i) in self.orders[s.feature][lo..hi].iter().enumerate() {
            self.goes_left[i as usize] = k < s.left_count;
        }
        for f in 0..self.x.cols {
            if f == s.feature {
                continue;
            }
            self.scratch.clear();
            let seg = &mut self.orders[f][lo..hi];
            let mut w = 0;
            for r in 0..seg.len() {
                let i = seg[r];
                if self.goes_left[i as usize] {
                    seg[w] = i;
                    w += 1;
                } else {
                    self.scratch.push(i);
                }
            }
            seg[w..].copy_from_slice(&self.scratch);
        }
        let left = self.grow(lo, mid, depth + 1);
        let right = self.grow(mid, hi, depth + 1);
        self.nodes[id] = Node::Split {
            feature: s.feature,
            threshold: s.threshold,
            left,
            right,
        };
        id
    }
}

/// Grows one tree on the rows listed in `rows`; repeated rows count repeatedly.
pub fn fit_tree<T: Real>(x: &Matrix<T>, y: &[T], rows: &[usize], params: &ForestParams) -> RegressionTree<T> {
    assert!(!rows.is_empty());
    let mut b = Builder::new(x, y, rows, params);
    b.grow(0, rows.len(), 0);
    RegressionTree { nodes: b.nodes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest<T> {
    pub trees: Vec<RegressionTree<T>>,
    pub aggregation: Aggregation,
}

/// Trees are grown in parallel; tree `k` draws its bootstrap sample from a
/// seed derived from `(seed, k)`, so the forest does not depend on scheduling.
pub fn fit_forest<T: Real>(x: &Matrix<T>, y: &[T], params: &ForestParams, seed_value: u64) -> RandomForest<T> {
    assert!(x.rows > 0 && x.rows == y.len());
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|k| {
            let rows: Vec<usize> = if params.bootstrap {
                let mut rng = seed::rng(seed::derive(seed_value, &[k as u64]));
                (0..x.rows).map(|_| rng.random_range(0..x.rows)).collect()
            } else {
                (0..x.rows).collect()
            };
            fit_tree(x, y, &rows, params)
        })
        .collect();
    RandomForest {
        trees,
        aggregation: params.aggregation,
    }
}

impl<T: Real> RandomForest<T> {
    pub fn predict_row(&self, row: &[T]) -> T {
        let mut votes: Vec<T> = self.trees.iter().map(|t| t.predict_row(row)).collect();
        match self.aggregation {
            Aggregation::Mean => votes.iter().copied().sum::<T>() / T::of_usize(votes.len()),
            Aggregation::Median => {
                votes.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                let m = votes.len() / 2;
                if votes.len() % 2 == 1 {
                    votes[m]
                } else {
                    (votes[m - 1] + votes[m]) / T::of(2.0)
                }
            }
        }
    }
}
