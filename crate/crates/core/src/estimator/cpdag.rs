use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::TargetEstimate;
use crate::sem::Dag;
use crate::{Edge, Error, Result};

/// Partially directed graph: directed edges `a -> b` plus undirected edges
/// stored as `(min, max)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cpdag {
    p: usize,
    directed: BTreeSet<Edge>,
    undirected: BTreeSet<Edge>,
}

fn key(a: usize, b: usize) -> Edge {
    (a.min(b), a.max(b))
}

impl Cpdag {
    pub fn new(p: usize, directed: &[Edge], undirected: &[Edge]) -> Result<Self> {
        let mut g = Cpdag {
            p,
            directed: BTreeSet::new(),
            undirected: BTreeSet::new(),
        };
        for &(a, b) in directed.iter().chain(undirected) {
            if a >= p || b >= p {
                return Err(Error::IndexOutOfRange { index: a.max(b), p });
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if g.adjacent(a, b) {
                return Err(Error::DuplicateEdge(a, b));
            }
            if directed.contains(&(a, b)) {
                g.directed.insert((a, b));
            } else {
                g.undirected.insert(key(a, b));
            }
        }
        Ok(g)
    }

    /// Markov equivalence class of `dag`: v-structures oriented, then closed
    /// under the orientation rules.
    pub fn from_dag(dag: &Dag) -> Self {
        Self::from_dag_with(dag, &BTreeSet::new())
    }

    /// Like [`Cpdag::from_dag`], with `forced` edges of the DAG directed up front.
    pub(crate) fn from_dag_with(dag: &Dag, forced: &BTreeSet<Edge>) -> Self {
        let mut g = Cpdag {
            p: dag.p(),
            directed: BTreeSet::new(),
            undirected: dag.edges().iter().map(|&(a, b)| key(a, b)).collect(),
        };
        for v in 0..dag.p() {
            let pa = dag.parents(v);
            for (x, &a) in pa.iter().enumerate() {
                for &b in &pa[x + 1..] {
                    if !dag.adjacent(a, b) {
                        g.orient(a, v);
                        g.orient(b, v);
                    }
                }
            }
        }
        for &(a, b) in forced {
            g.orient(a, b);
        }
        g.close();
        g
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn directed(&self) -> &BTreeSet<Edge> {
        &self.directed
    }

    /// Undirected edges as `(min, max)`.
    pub fn undirected(&self) -> &BTreeSet<Edge> {
        &self.undirected
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.directed.contains(&(a, b))
            || self.directed.contains(&(b, a))
            || self.undirected.contains(&key(a, b))
    }

    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.directed.contains(&(a, b))
    }

    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&key(a, b))
    }

    /// Turns `a - b` into `a -> b`. No-op unless the edge is undirected.
    fn orient(&mut self, a: usize, b: usize) -> bool {
        if self.undirected.remove(&key(a, b)) {
            self.directed.insert((a, b));
            true
        } else {
            false
        }
    }

    /// Drops node `p - 1` and every edge touching it.
    pub(crate) fn without_last_node(mut self) -> Self {
        let z = self.p - 1;
        self.directed.retain(|&(a, b)| a != z && b != z);
        self.undirected.retain(|&(a, b)| a != z && b != z);
        self.p = z;
        self
    }

    /// Applies the four orientation-propagation rules until nothing changes.
    pub fn close(&mut self) {
        while let Some((a, b)) = self.next_forced() {
            self.orient(a, b);
        }
    }

    fn next_forced(&self) -> Option<Edge> {
        for &(u, v) in &self.undirected {
            for (a, b) in [(u, v), (v, u)] {
                if self.rule1(a, b) || self.rule2(a, b) || self.rule3(a, b) || self.rule4(a, b) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    fn nodes(&self) -> std::ops::Range<usize> {
        0..self.p
    }

    // c -> a - b, c and b non-adjacent.
    fn rule1(&self, a: usize, b: usize) -> bool {
        self.nodes()
            .any(|c| c != b && self.is_directed(c, a) && !self.adjacent(c, b))
    }

    // a -> c -> b.
    fn rule2(&self, a: usize, b: usize) -> bool {
        self.nodes()
            .any(|c| self.is_directed(a, c) && self.is_directed(c, b))
    }

    // a - c -> b, a - d -> b, c and d non-adjacent.
    fn rule3(&self, a: usize, b: usize) -> bool {
        let mids: Vec<usize> = self
            .nodes()
            .filter(|&c| c != b && self.is_undirected(a, c) && self.is_directed(c, b))
            .collect();
        mids.iter().enumerate().any(|(x, &c)| {
            mids[x + 1..].iter().any(|&d| !self.adjacent(c, d))
        })
    }

    // a - c -> d -> b, a adjacent to d, c and b non-adjacent.
    fn rule4(&self, a: usize, b: usize) -> bool {
        self.nodes().any(|c| {
            c != b
                && self.is_undirected(a, c)
                && !self.adjacent(c, b)
                && self.nodes().any(|d| {
                    d != a && self.is_directed(c, d) && self.is_directed(d, b) && self.adjacent(a, d)
                })
        })
    }
}

/// Refined graph plus the orientations that could not be applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refinement {
    pub cpdag: Cpdag,
    /// Requested orientations that contradict an existing one; the existing
    /// orientation is kept.
    pub conflicts: Vec<Edge>,
    /// Requested orientations between non-adjacent nodes.
    pub skipped: Vec<Edge>,
}

/// Orients the estimated parent edges and positive cross-class decisions in
/// `cpdag`, then propagates.
pub fn refine_cpdag(cpdag: &Cpdag, estimate: &TargetEstimate) -> Result<Refinement> {
    let requested: Vec<Edge> = estimate
        .parents
        .iter()
        .copied()
        .chain(
            estimate
                .extra_orientations
                .iter()
                .filter(|o| o.is_parent)
                .map(|o| (o.from, o.to)),
        )
        .collect();
    if let Some(&(a, b)) = requested.iter().find(|&&(a, b)| a >= cpdag.p || b >= cpdag.p) {
        return Err(Error::IndexOutOfRange {
            index: a.max(b),
            p: cpdag.p,
        });
    }
    let mut g = cpdag.clone();
    let mut conflicts = Vec::new();
    let mut skipped = Vec::new();
    for (a, b) in requested {
        if g.is_undirected(a, b) {
            g.orient(a, b);
        } else if g.is_directed(b, a) {
            conflicts.push((a, b));
        } else if !g.adjacent(a, b) {
            skipped.push((a, b));
        }
    }
    g.close();
    Ok(Refinement {
        cpdag: g,
        conflicts,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_is_fully_undirected() {
        let g = Cpdag::from_dag(&Dag::new(3, &[(0, 1), (1, 2)]).unwrap());
        assert!(g.directed().is_empty());
        assert_eq!(g.undirected().len(), 2);
    }

    #[test]
    fn collider_and_rule_one() {
        // 0 -> 2 <- 1, 2 -> 3: collider oriented, 2 -> 3 by rule 1.
        let g = Cpdag::from_dag(&Dag::new(4, &[(0, 2), (1, 2), (2, 3)]).unwrap());
        assert!(g.undirected().is_empty());
        assert!(g.is_directed(2, 3));
    }

    #[test]
    fn example_one_keeps_single_undirected_edge() {
        let dag = Dag::new(5, &[(0, 2), (2, 3), (1, 3), (1, 4), (3, 4)]).unwrap();
        let g = Cpdag::from_dag(&dag);
        assert_eq!(g.undirected(), &BTreeSet::from([(0, 2)]));
        assert_eq!(g.directed().len(), 4);
    }

    #[test]
    fn rule_two_closes_triangle() {
        let mut g = Cpdag::new(3, &[(0, 1), (1, 2)], &[(0, 2)]).unwrap();
        g.close();
        assert!(g.is_directed(0, 2));
    }

    #[test]
    fn rule_three() {
        // a=0 with neighbours 1, 2 (non-adjacent), both pointing into 3.
        let mut g = Cpdag::new(4, &[(1, 3), (2, 3)], &[(0, 1), (0, 2), (0, 3)]).unwrap();
        g.close();
        assert!(g.is_directed(0, 3));
    }

    #[test]
    fn rule_four() {
        // 0 - 1 -> 2 -> 3, 0 adjacent to 2, 1 and 3 non-adjacent: 0 -> 3.
        let mut g = Cpdag::new(4, &[(1, 2), (2, 3)], &[(0, 1), (0, 2), (0, 3)]).unwrap();
        g.close();
        assert!(g.is_directed(0, 3));
    }

    #[test]
    fn invalid_edges_rejected() {
        assert!(matches!(Cpdag::new(2, &[(0, 2)], &[]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(Cpdag::new(2, &[(0, 1)], &[(1, 0)]), Err(Error::DuplicateEdge(..))));
    }
}
