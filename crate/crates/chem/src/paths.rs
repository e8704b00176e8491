//! Unweighted all-pairs shortest paths on a filtered graph.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pmfg::WeightedGraph;

pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopMatrix {
    pub n: usize,
    dist: Vec<u32>,
}

impl HopMatrix {
    /// Hop count, or [`UNREACHABLE`].
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.dist[i * self.n + j]
    }
}

pub fn all_pairs_shortest_paths(g: &WeightedGraph) -> HopMatrix {
    let adj = g.adjacency();
    let rows: Vec<Vec<u32>> = (0..g.n)
        .into_par_iter()
        .map(|s| {
            let mut d = vec![UNREACHABLE; g.n];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &w in &adj[v] {
                    if d[w] == UNREACHABLE {
                        d[w] = d[v] + 1;
                        q.push_back(w);
                    }
                }
            }
            d
        })
        .collect();
    HopMatrix {
        n: g.n,
        dist: rows.concat(),
    }
}

/// Hop-count frequencies over unordered pairs; unreachable pairs are
/// counted separately.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopCounts {
    pub counts: BTreeMap<u32, usize>,
    pub unreachable: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupedHops {
    pub within_train: HopCounts,
    pub within_test: HopCounts,
    pub cross: HopCounts,
}

pub fn hop_histograms(h: &HopMatrix, is_test: &[bool]) -> GroupedHops {
    assert_eq!(is_test.len(), h.n, "one membership flag per node");
    let mut g = GroupedHops::default();
    for i in 0..h.n {
        for j in (i + 1)..h.n {
            let bucket = match (is_test[i], is_test[j]) {
                (false, false) => &mut g.within_train,
                (true, true) => &mut g.within_test,
                _ => &mut g.cross,
            };
            match h.get(i, j) {
                UNREACHABLE => bucket.unreachable += 1,
                d => *bucket.counts.entry(d).or_default() += 1,
            }
        }
    }
    g
}
