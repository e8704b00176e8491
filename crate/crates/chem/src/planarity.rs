//! Left-right planarity test.
//!
//! A DFS orients the graph and computes low points; a second DFS processes
//! outgoing edges in nesting order while maintaining a stack of conflict
//! pairs of return-edge intervals. The graph is planar iff no pair ends up
//! with conflicting edges on both sides.

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Interval {
    low: Option<usize>,
    high: Option<usize>,
}

impl Interval {
    fn empty(&self) -> bool {
        self.low.is_none() && self.high.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ConflictPair {
    left: Interval,
    right: Interval,
}

impl ConflictPair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.left, &mut self.right);
    }
}

/// Reusable left-right tester over a graph built edge by edge.
pub(crate) struct State {
    adj: Vec<Vec<(usize, usize)>>,
    m: usize,
    src: Vec<usize>,
    dst: Vec<usize>,
    oriented: Vec<bool>,
    height: Vec<usize>,
    parent_edge: Vec<Option<usize>>,
    lowpt: Vec<usize>,
    lowpt2: Vec<usize>,
    nesting: Vec<usize>,
    out: Vec<Vec<usize>>,
    stack: Vec<ConflictPair>,
    stack_bottom: Vec<usize>,
    lowpt_edge: Vec<usize>,
    refs: Vec<Option<usize>>,
}

const NONE: usize = usize::MAX;

impl State {
    fn orient(&mut self, v: usize) {
        let e = self.parent_edge[v];
        for k in 0..self.adj[v].len() {
            let (w, id) = self.adj[v][k];
            if self.oriented[id] {
                continue;
            }
            self.oriented[id] = true;
            self.src[id] = v;
            self.dst[id] = w;
            self.out[v].push(id);
            self.lowpt[id] = self.height[v];
            self.lowpt2[id] = self.height[v];
            if self.height[w] == NONE {
                self.parent_edge[w] = Some(id);
                self.height[w] = self.height[v] + 1;
                self.orient(w);
            } else {
                self.lowpt[id] = self.height[w];
            }
            self.nesting[id] = 2 * self.lowpt[id] + usize::from(self.lowpt2[id] < self.height[v]);
            if let Some(e) = e {
                if self.lowpt[id] < self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt[e].min(self.lowpt2[id]);
                    self.lowpt[e] = self.lowpt[id];
                } else if self.lowpt[id] > self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt[id]);
                } else {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt2[id]);
                }
            }
        }
    }

    fn conflicting(&self, i: &Interval, b: usize) -> bool {
        !i.empty() && i.high.is_some_and(|h| self.lowpt[h] > self.lowpt[b])
    }

    fn lowest(&self, p: &ConflictPair) -> usize {
        if p.left.empty() {
            return self.lowpt[p.right.low.expect("non-empty pair")];
        }
        if p.right.empty() {
            return self.lowpt[p.left.low.expect("non-empty pair")];
        }
        self.lowpt[p.left.low.expect("set")].min(self.lowpt[p.right.low.expect("set")])
    }

    fn test(&mut self, v: usize) -> bool {
        let e = self.parent_edge[v];
        for k in 0..self.out[v].len() {
            let ei = self.out[v][k];
            let w = self.dst[ei];
            self.stack_bottom[ei] = self.stack.len();
            if self.parent_edge[w] == Some(ei) {
                if !self.test(w) {
                    return false;
                }
            } else {
                self.lowpt_edge[ei] = ei;
                self.stack.push(ConflictPair {
                    left: Interval::default(),
                    right: Interval {
                        low: Some(ei),
                        high: Some(ei),
                    },
                });
            }
            if self.lowpt[ei] < self.height[v] {
                let e = e.expect("only non-root vertices have return edges");
                if k == 0 {
                    self.lowpt_edge[e] = self.lowpt_edge[ei];
                } else if !self.add_constraints(ei, e) {
                    return false;
                }
            }
        }
        if let Some(e) = e {
            self.remove_back_edges(e);
        }
        true
    }

    fn add_constraints(&mut self, ei: usize, e: usize) -> bool {
        let mut p = ConflictPair::default();
        loop {
            let mut q = self.stack.pop().expect("return edges above the stack bottom");
            if !q.left.empty() {
                q.swap();
            }
            if !q.left.empty() {
                return false;
            }
            let qlow = q.right.low.expect("non-empty right interval");
            if self.lowpt[qlow] > self.lowpt[e] {
                if p.right.empty() {
                    p.right = q.right;
                } else {
                    self.refs[p.right.low.expect("set")] = q.right.high;
                }
                p.right.low = q.right.low;
            } else {
                self.refs[qlow] = Some(self.lowpt_edge[e]);
            }
            if self.stack.len() == self.stack_bottom[ei] {
                break;
            }
        }
        while let Some(top) = self.stack.last() {
            if !(self.conflicting(&top.left, ei) || self.conflicting(&top.right, ei)) {
                break;
            }
            let mut q = self.stack.pop().expect("checked");
            if self.conflicting(&q.right, ei) {
                q.swap();
            }
            if self.conflicting(&q.right, ei) {
                return false;
            }
            if let Some(l) = p.right.low {
                self.refs[l] = q.right.high;
            }
            if q.right.low.is_some() {
                p.right.low = q.right.low;
            }
            if p.left.empty() {
                p.left = q.left;
            } else if let Some(l) = p.left.low {
                self.refs[l] = q.left.high;
            }
            p.left.low = q.left.low;
        }
        if !(p.left.empty() && p.right.empty()) {
            self.stack.push(p);
        }
        true
    }

    fn remove_back_edges(&mut self, e: usize) {
        let u = self.src[e];
        while let Some(top) = self.stack.last() {
            if self.lowest(top) != self.height[u] {
                break;
            }
            self.stack.pop();
        }
        if let Some(mut p) = self.stack.pop() {
            while let Some(h) = p.left.high {
                if self.dst[h] != u {
                    break;
                }
                p.left.high = self.refs[h];
            }
            if p.left.high.is_none() {
                if let Some(l) = p.left.low {
                    self.refs[l] = p.right.low;
                    p.left.low = None;
                }
            }
            while let Some(h) = p.right.high {
                if self.dst[h] != u {
                    break;
                }
                p.right.high = self.refs[h];
            }
            if p.right.high.is_none() {
                if let Some(l) = p.right.low {
                    self.refs[l] = p.left.low;
                    p.right.low = None;
                }
            }
            self.stack.push(p);
        }
        if self.lowpt[e] < self.height[u] {
            if let Some(top) = self.stack.last() {
                let (hl, hr) = (top.left.high, top.right.high);
                self.refs[e] = match (hl, hr) {
                    (Some(l), None) => Some(l),
                    (Some(l), Some(r)) if self.lowpt[l] > self.lowpt[r] => Some(l),
                    _ => hr,
                };
            }
        }
    }
}

impl State {
    pub(crate) fn new(n: usize) -> Self {
        State {
            adj: vec![Vec::new(); n],
            m: 0,
            src: Vec::new(),
            dst: Vec::new(),
            oriented: Vec::new(),
            height: Vec::new(),
            parent_edge: Vec::new(),
            lowpt: Vec::new(),
            lowpt2: Vec::new(),
            nesting: Vec::new(),
            out: vec![Vec::new(); n],
            stack: Vec::new(),
            stack_bottom: Vec::new(),
            lowpt_edge: Vec::new(),
            refs: Vec::new(),
        }
    }

    /// The caller keeps the graph simple.
    pub(crate) fn push_edge(&mut self, a: usize, b: usize) {
        self.adj[a].push((b, self.m));
        self.adj[b].push((a, self.m));
        self.m += 1;
    }

    /// Removes the most recently pushed edge `(a, b)`.
    pub(crate) fn pop_edge(&mut self, a: usize, b: usize) {
        self.adj[a].pop();
        self.adj[b].pop();
        self.m -= 1;
    }

    pub(crate) fn is_planar(&mut self) -> bool {
        let (n, m) = (self.adj.len(), self.m);
        if n > 2 && m > 3 * n - 6 {
            return false;
        }
        fn reset<T: Clone>(v: &mut Vec<T>, len: usize, value: T) {
            v.clear();
            v.resize(len, value);
        }
        reset(&mut self.src, m, NONE);
        reset(&mut self.dst, m, NONE);
        reset(&mut self.oriented, m, false);
        reset(&mut self.height, n, NONE);
        reset(&mut self.parent_edge, n, None);
        reset(&mut self.lowpt, m, 0);
        reset(&mut self.lowpt2, m, 0);
        reset(&mut self.nesting, m, 0);
        reset(&mut self.stack_bottom, m, 0);
        reset(&mut self.lowpt_edge, m, 0);
        reset(&mut self.refs, m, None);
        self.out.iter_mut().for_each(Vec::clear);
        self.stack.clear();

        let mut roots = Vec::new();
        for v in 0..n {
            if self.height[v] == NONE {
                self.height[v] = 0;
                roots.push(v);
                self.orient(v);
            }
        }
        for v in 0..n {
            let mut out = std::mem::take(&mut self.out[v]);
            out.sort_by_key(|&id| self.nesting[id]);
            self.out[v] = out;
        }
        roots.into_iter().all(|r| self.test(r))
    }
}

/// Whether the simple graph on `n` vertices with the given undirected edges
/// is planar. Self-loops and repeated edges are ignored.
pub fn is_planar(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut keys: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(a, b)| {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range");
            (a.min(b), a.max(b))
        })
        .filter(|&(a, b)| a != b)
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let mut s = State::new(n);
    for (a, b) in keys {
        s.push_edge(a, b);
    }
    s.is_planar()
}
