//! Planar maximally filtered graph: strongest edges first, kept while the
//! graph stays planar, until it holds 3(n − 2) edges.

use std::io::Write;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planarity::State;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    pub n: usize,
    /// `(i, j, weight)` with `i < j`, in acceptance order.
    pub edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, _) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// `node_i,node_j,weight` rows.
    pub fn write_edge_list<W: Write>(&self, labels: &[String], mut w: W) -> std::io::Result<()> {
        writeln!(w, "node_i,node_j,weight")?;
        for &(i, j, x) in &self.edges {
            writeln!(w, "{},{},{x}", labels[i], labels[j])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PmfgError {
    #[error("PMFG needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("similarity matrix is {0}×{1}, not square")]
    NotSquare(usize, usize),
    #[error("similarity matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("similarity matrix has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Candidates are taken by descending weight, ties by the smaller then the
/// larger endpoint. An edge joining two components is always accepted.
pub fn pmfg_construct(similarity: ArrayView2<f64>) -> Result<WeightedGraph, PmfgError> {
    let (n, m) = similarity.dim();
    if n != m {
        return Err(PmfgError::NotSquare(n, m));
    }
    if n < 3 {
        return Err(PmfgError::TooFewNodes(n));
    }
    let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = similarity[[i, j]];
            if !w.is_finite() {
                return Err(PmfgError::NonFinite(i, j));
            }
            if w != similarity[[j, i]] {
                return Err(PmfgError::NotSymmetric(i, j));
            }
            candidates.push((i, j, w));
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let target = 3 * (n - 2);
    let mut uf = UnionFind((0..n).collect());
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(target);
    let mut graph = State::new(n);
    for (i, j, w) in candidates {
        if edges.len() == target {
            break;
        }
        graph.push_edge(i, j);
        if uf.union(i, j) || graph.is_planar() {
            edges.push((i, j, w));
        } else {
            graph.pop_edge(i, j);
        }
    }
    Ok(WeightedGraph { n, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn distinct(n: usize) -> Array2<f64> {
        let mut k = 0.0;
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                k += 1.0;
                let w = ((k * 7.0) % 13.0) + k / 100.0;
                m[[i, j]] = w;
                m[[j, i]] = w;
            }
        }
        m
    }

    #[test]
    fn k4_keeps_everything() {
        assert_eq!(pmfg_construct(distinct(4).view()).unwrap().edges.len(), 6);
    }

    #[test]
    fn k5_drops_the_weakest_edge() {
        let s = distinct(5);
        let g = pmfg_construct(s.view()).unwrap();
        assert_eq!(g.edges.len(), 9);
        let mut all: Vec<(usize, usize, f64)> = (0..5)
            .flat_map(|i| ((i + 1)..5).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, s[[i, j]]))
            .collect();
        all.sort_by(|a, b| a.2.total_cmp(&b.2));
        let weakest = all[0];
        assert!(!g.edges.iter().any(|e| (e.0, e.1) == (weakest.0, weakest.1)));
    }

    #[test]
    fn input_checks() {
        assert_eq!(pmfg_construct(Array2::zeros((2, 2)).view()), Err(PmfgError::TooFewNodes(2)));
        let mut s = distinct(4);
        s[[0, 1]] = 99.0;
        assert!(matches!(pmfg_construct(s.view()), Err(PmfgError::NotSymmetric(0, 1))));
        assert!(pmfg_construct(Array2::zeros((3, 4)).view()).is_err());
    }

    #[test]
    fn five_nodes_give_nine_edges_even_with_ties() {
        let g = pmfg_construct(Array2::from_elem((5, 5), 0.5).view()).unwrap();
        assert_eq!(g.edges.len(), 9);
        assert_eq!((g.edges[0].0, g.edges[0].1), (0, 1));
    }
}
