use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::{Edge, Error, NodeSet, Result};

/// Directed acyclic graph over nodes `0..p`.
///
/// Parent and child lists are sorted, and the stored topological order is the
/// lexicographically smallest one (Kahn's algorithm with a min-heap), so two
/// graphs with the same edge set compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    p: usize,
    edges: BTreeSet<Edge>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo_order: Vec<usize>,
    /// `rank[v]` is the position of `v` in `topo_order`.
    rank: Vec<usize>,
}

impl Dag {
    /// Builds a DAG, rejecting out-of-range indices, duplicates, self-loops
    /// and directed cycles.
    pub fn new(p: usize, edges: &[Edge]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            for index in [i, j] {
                if index >= p {
                    return Err(Error::IndexOutOfRange { index, p });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if !set.insert((i, j)) {
                return Err(Error::DuplicateEdge(i, j));
            }
        }
        Self::from_edge_set(p, set)
    }

    pub fn empty(p: usize) -> Self {
        Self::from_edge_set(p, BTreeSet::new()).expect("empty graph is acyclic")
    }

    fn from_edge_set(p: usize, edges: BTreeSet<Edge>) -> Result<Self> {
        let mut parents = vec![Vec::new(); p];
        let mut children = vec![Vec::new(); p];
        for &(i, j) in &edges {
            children[i].push(j);
            parents[j].push(i);
        }

        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = (0..p)
            .filter(|&v| indegree[v] == 0)
            .map(Reverse)
            .collect();
        let mut topo_order = Vec::with_capacity(p);
        while let Some(Reverse(v)) = ready.pop() {
            topo_order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        if topo_order.len() < p {
            let stuck = (0..p).find(|&v| indegree[v] > 0).unwrap_or(0);
            return Err(Error::CycleDetected(stuck));
        }
        let mut rank = vec![0; p];
        for (pos, &v) in topo_order.iter().enumerate() {
            rank[v] = pos;
        }
        Ok(Dag {
            p,
            edges,
            parents,
            children,
            topo_order,
            rank,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// In-degree plus out-degree.
    pub fn degree(&self, v: usize) -> usize {
        self.parents[v].len() + self.children[v].len()
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// Position of `v` in the topological order.
    pub fn rank(&self, v: usize) -> usize {
        self.rank[v]
    }

    /// Strict ancestors of `v` (excluding `v`).
    pub fn ancestors(&self, v: usize) -> NodeSet {
        self.reach(v, |u| &self.parents[u])
    }

    /// Strict descendants of `v` (excluding `v`).
    pub fn descendants(&self, v: usize) -> NodeSet {
        self.reach(v, |u| &self.children[u])
    }

    /// Union of the nodes in `set` and all their ancestors.
    pub fn ancestral_closure(&self, set: &NodeSet) -> NodeSet {
        let mut out = set.clone();
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(u) = stack.pop() {
            for &q in &self.parents[u] {
                if out.insert(q) {
                    stack.push(q);
                }
            }
        }
        out
    }

    fn reach<'a, F>(&'a self, start: usize, next: F) -> NodeSet
    where
        F: Fn(usize) -> &'a [usize],
    {
        let mut seen = NodeSet::new();
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &w in next(u) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Sorts `nodes` by topological rank.
    pub fn sort_topologically(&self, nodes: &mut [usize]) {
        nodes.sort_by_key(|&v| self.rank[v]);
    }
}
