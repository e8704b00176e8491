//! Gradient-boosted regression trees on the logistic loss.
//!
//! Each tree is grown level by level on the residuals `y − p`, choosing the
//! split with the largest variance reduction (ties: lowest feature index, then
//! lowest threshold). Leaves take a Newton step `Σ(y − p) / Σ p(1 − p)`,
//! shrunk by the learning rate.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::sigmoid;
use crate::error::{Error, Result};

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 5,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 || self.min_leaf == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(
                "gbdt needs max_depth >= 1, min_leaf >= 1 and learning_rate > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: ArrayView1<f64>) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub n_features: usize,
    pub base_rate: f64,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GbdtModel {
    pub fn raw_score(&self, row: ArrayView1<f64>) -> f64 {
        self.base_score
            + self.learning_rate * self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        if self.trees.is_empty() {
            return vec![self.base_rate; x.nrows()];
        }
        x.rows().into_iter().map(|r| sigmoid(self.raw_score(r))).collect()
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Per-frontier-node accumulator while scanning one feature.
#[derive(Clone, Copy, Default)]
struct Scan {
    count: usize,
    sum: f64,
    last: Option<f64>,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

fn grow_tree(
    p: &GbdtParams,
    x: ArrayView2<f64>,
    order: &[Vec<usize>],
    grad: &[f64],
    hess: &[f64],
) -> (Tree, Vec<usize>) {
    let n = grad.len();
    let mut node_of = vec![0usize; n];
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut frontier = vec![0usize];

    for _ in 0..p.max_depth {
        // slot of each node id in the frontier
        let mut slot = vec![usize::MAX; nodes.len()];
        for (s, &id) in frontier.iter().enumerate() {
            slot[id] = s;
        }
        let mut totals = vec![(0usize, 0.0f64); frontier.len()];
        for i in 0..n {
            let s = slot[node_of[i]];
            if s != usize::MAX {
                totals[s].0 += 1;
                totals[s].1 += grad[i];
            }
        }
        let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
        for (f, rows) in order.iter().enumerate() {
            let mut scans = vec![Scan::default(); frontier.len()];
            for &i in rows {
                let s = slot[node_of[i]];
                if s == usize::MAX {
                    continue;
                }
                let v = x[[i, f]];
                let sc = &mut scans[s];
                if let Some(last) = sc.last {
                    if v > last {
                        let (tot_n, tot_g) = totals[s];
                        let (ln, rn) = (sc.count, tot_n - sc.count);
                        if ln >= p.min_leaf && rn >= p.min_leaf {
                            let (lg, rg) = (sc.sum, tot_g - sc.sum);
                            let gain = lg * lg / ln as f64 + rg * rg / rn as f64
                                - tot_g * tot_g / tot_n as f64;
                            let better = match best[s] {
                                None => gain > MIN_GAIN,
                                Some(b) => gain > b.gain,
                            };
                            if better {
                                best[s] = Some(Candidate {
                                    gain,
                                    feature: f,
                                    threshold: midpoint(last, v),
                                });
                            }
                        }
                    }
                }
                sc.count += 1;
                sc.sum += grad[i];
                sc.last = Some(v);
            }
        }

        let mut next = Vec::new();
        let mut children = vec![None; frontier.len()];
        for (s, &id) in frontier.iter().enumerate() {
            if let Some(c) = best[s] {
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[id] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right: left + 1,
                };
                children[s] = Some((c.feature, c.threshold, left));
                next.extend([left, left + 1]);
            }
        }
        if next.is_empty() {
            break;
        }
        for i in 0..n {
            let s = slot[node_of[i]];
            if s == usize::MAX {
                continue;
            }
            if let Some((f, t, left)) = children[s] {
                node_of[i] = if x[[i, f]] <= t { left } else { left + 1 };
            }
        }
        frontier = next;
    }

    let mut sums = vec![(0.0f64, 0.0f64); nodes.len()];
    for i in 0..n {
        sums[node_of[i]].0 += grad[i];
        sums[node_of[i]].1 += hess[i];
    }
    for (id, node) in nodes.iter_mut().enumerate() {
        if let Node::Leaf { value } = node {
            let (g, h) = sums[id];
            *value = if h > 1e-300 { g / h } else { 0.0 };
        }
    }
    (Tree { nodes }, node_of)
}

pub fn fit(p: &GbdtParams, x: ArrayView2<f64>, y: &[bool]) -> GbdtModel {
    let n = y.len();
    let base_rate = y.iter().filter(|&&l| l).count() as f64 / n as f64;
    let base_score = (base_rate / (1.0 - base_rate)).ln();
    let order: Vec<Vec<usize>> = x
        .columns()
        .into_iter()
        .map(|col| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let mut score = vec![base_score; n];
    let mut trees = Vec::with_capacity(p.n_trees);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for _ in 0..p.n_trees {
        for i in 0..n {
            let prob = sigmoid(score[i]);
            grad[i] = if y[i] { 1.0 } else { 0.0 } - prob;
            hess[i] = prob * (1.0 - prob);
        }
        let (tree, leaf_of) = grow_tree(p, x, &order, &grad, &hess);
        for i in 0..n {
            if let Node::Leaf { value } = tree.nodes[leaf_of[i]] {
                score[i] += p.learning_rate * value;
            }
        }
        trees.push(tree);
    }
    GbdtModel {
        n_features: x.ncols(),
        base_rate,
        base_score,
        learning_rate: p.learning_rate,
        trees,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_trees_predict_base_rate() {
        let x = array![[1.0], [2.0], [3.0], [4.0], [5.0], [6.0], [7.0]];
        let y = [true, false, false, true, false, false, false];
        let m = fit(&GbdtParams { n_trees: 0, ..Default::default() }, x.view(), &y);
        assert!(m.predict_proba(x.view()).iter().all(|&p| p == 2.0 / 7.0));
    }

    #[test]
    fn single_stump_separates() {
        let x = array![[0.1], [0.4], [0.2], [0.9], [0.7], [0.8]];
        let y = [false, false, false, true, true, true];
        let p = GbdtParams {
            n_trees: 1,
            max_depth: 1,
            learning_rate: 0.1,
            min_leaf: 1,
        };
        let m = fit(&p, x.view(), &y);
        assert_eq!(m.trees[0].depth(), 1);
        match m.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert!((threshold - 0.55).abs() < 1e-12);
            }
            _ => panic!("expected a split"),
        }
        let probs = m.predict_proba(x.view());
        for (prob, label) in probs.iter().zip(y) {
            assert_eq!(*prob > 0.5, label);
        }
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // both features separate perfectly with the same gain
        let x = array![[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]];
        let p = GbdtParams { n_trees: 1, max_depth: 1, learning_rate: 1.0, min_leaf: 1 };
        let m = fit(&p, x.view(), &[false, false, true, true]);
        assert!(matches!(m.trees[0].nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn min_leaf_blocks_small_children() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let p = GbdtParams { n_trees: 1, max_depth: 2, learning_rate: 1.0, min_leaf: 3 };
        let m = fit(&p, x.view(), &[false, true, false, true]);
        assert_eq!(m.trees[0].nodes.len(), 1);
    }
}
