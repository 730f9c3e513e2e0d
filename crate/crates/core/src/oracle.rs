//! Ground truth computed from the graph alone, plus an exhaustive target
//! search used to cross-check the estimator.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::estimator::{Cpdag, EquivalenceClass};
use crate::pde::{exact_precision_difference, CovariancePair};
use crate::sem::{changed_nodes, Dag, LinearSem};
use crate::{Edge, Error, NodeSet, Result};

/// Largest changed-node set [`brute_force_targets`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// True iff every path between `x` and `y` is blocked by `z`.
///
/// Reachability over (node, direction) states: a trail may pass a
/// non-collider outside `z`, or a collider with a descendant in `z`.
pub fn d_separated(dag: &Dag, x: usize, y: usize, z: &NodeSet) -> bool {
    !reachable(dag, x, z).contains(&y)
}

/// Nodes d-connected to `x` given `z`.
fn reachable(dag: &Dag, x: usize, z: &NodeSet) -> NodeSet {
    // Nodes with a descendant in z (including z itself).
    let mut opens_collider = vec![false; dag.p()];
    let mut stack: Vec<usize> = z.iter().copied().collect();
    while let Some(v) = stack.pop() {
        if !opens_collider[v] {
            opens_collider[v] = true;
            stack.extend(dag.parents(v).iter().copied());
        }
    }

    // `up`: arrived from a child; `!up`: arrived from a parent.
    let mut seen = BTreeSet::new();
    let mut out = NodeSet::new();
    let mut queue = VecDeque::from([(x, true)]);
    while let Some((v, up)) = queue.pop_front() {
        if !seen.insert((v, up)) {
            continue;
        }
        let blocked = z.contains(&v);
        if !blocked {
            out.insert(v);
        }
        if up && !blocked {
            queue.extend(dag.parents(v).iter().map(|&u| (u, true)));
            queue.extend(dag.children(v).iter().map(|&c| (c, false)));
        } else if !up {
            if !blocked {
                queue.extend(dag.children(v).iter().map(|&c| (c, false)));
            }
            if opens_collider[v] {
                queue.extend(dag.parents(v).iter().map(|&u| (u, true)));
            }
        }
    }
    out.remove(&x);
    out
}

/// A DAG with an extra root `ζ = p` pointing into every target.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedGraph {
    base: Dag,
    targets: NodeSet,
    graph: Dag,
}

impl AugmentedGraph {
    pub fn new(base: &Dag, targets: &NodeSet) -> Result<Self> {
        let p = base.p();
        if let Some(&index) = targets.iter().find(|&&t| t >= p) {
            return Err(Error::TargetOutOfRange { index, p });
        }
        let edges: Vec<Edge> = base
            .edges()
            .iter()
            .copied()
            .chain(targets.iter().map(|&t| (p, t)))
            .collect();
        Ok(AugmentedGraph {
            base: base.clone(),
            targets: targets.clone(),
            graph: Dag::new(p + 1, &edges)?,
        })
    }

    pub fn base(&self) -> &Dag {
        &self.base
    }

    pub fn targets(&self) -> &NodeSet {
        &self.targets
    }

    /// Index of the added root.
    pub fn zeta(&self) -> usize {
        self.base.p()
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }
}

/// Predicts a zero diagonal at `j` in the precision difference on `s`:
/// true iff `ζ` and `j` are d-separated by `s \ {j}`.
pub fn invariance_oracle(aug: &AugmentedGraph, j: usize, s: &NodeSet) -> bool {
    if aug.targets.contains(&j) {
        return false;
    }
    let mut z = s.clone();
    z.remove(&j);
    d_separated(&aug.graph, aug.zeta(), j, &z)
}

/// Every intermediate of the estimator, derived from the graph.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub targets: NodeSet,
    pub s_delta: NodeSet,
    pub j0: NodeSet,
    pub source_sets: BTreeMap<usize, NodeSet>,
    pub classes: Vec<EquivalenceClass>,
    /// Non-target parents `j -> i` of targets `i` that lie in the conditioning
    /// set of `i`'s class: `j ∈ J₀`, or `j` has a different source set.
    pub parents: BTreeSet<Edge>,
    /// Every non-target parent of a target.
    pub all_parents: BTreeSet<Edge>,
}

impl GroundTruth {
    /// Classes as a set of member sets, ignoring order.
    pub fn class_partition(&self) -> BTreeSet<NodeSet> {
        partition(&self.classes)
    }
}

pub fn partition(classes: &[EquivalenceClass]) -> BTreeSet<NodeSet> {
    classes
        .iter()
        .map(|c| c.members.iter().copied().collect())
        .collect()
}

/// Ground truth for `sem1 -> sem2`, with the targets read off the models.
pub fn ground_truth_answers(sem1: &LinearSem, sem2: &LinearSem, targets: &NodeSet) -> Result<GroundTruth> {
    if sem1.p() != sem2.p() || sem1.dag().edges() != sem2.dag().edges() {
        return Err(Error::DimensionMismatch("models over different graphs".into()));
    }
    let actual = changed_nodes(sem1, sem2);
    if &actual != targets {
        return Err(Error::InvalidIntervention(format!(
            "targets {targets:?} differ from the changed nodes {actual:?}"
        )));
    }
    ground_truth(sem1.dag(), targets)
}

/// Graph-only form of [`ground_truth_answers`].
pub fn ground_truth(dag: &Dag, targets: &NodeSet) -> Result<GroundTruth> {
    let p = dag.p();
    if let Some(&index) = targets.iter().find(|&&t| t >= p) {
        return Err(Error::TargetOutOfRange { index, p });
    }
    let mut s_delta = targets.clone();
    for &t in targets {
        s_delta.extend(dag.parents(t).iter().copied());
    }
    let j0: NodeSet = s_delta
        .iter()
        .copied()
        .filter(|j| !targets.contains(j) && dag.ancestors(*j).is_disjoint(targets))
        .collect();
    let with_self = |v: usize| {
        let mut a = dag.ancestors(v);
        a.insert(v);
        a
    };
    let source_sets: BTreeMap<usize, NodeSet> = s_delta
        .difference(&j0)
        .map(|&k| {
            let ak = with_self(k);
            let set = j0
                .iter()
                .copied()
                .filter(|&j| !with_self(j).is_disjoint(&ak))
                .collect();
            (k, set)
        })
        .collect();

    let mut grouped: BTreeMap<(usize, Vec<usize>), Vec<usize>> = BTreeMap::new();
    for (&k, set) in &source_sets {
        grouped
            .entry((set.len(), set.iter().copied().collect()))
            .or_default()
            .push(k);
    }
    let classes: Vec<EquivalenceClass> = grouped
        .into_iter()
        .map(|((_, sources), members)| EquivalenceClass {
            members,
            sources: sources.into_iter().collect(),
        })
        .collect();

    let mut parents = BTreeSet::new();
    let mut all_parents = BTreeSet::new();
    for &i in targets {
        for &j in dag.parents(i) {
            if targets.contains(&j) {
                continue;
            }
            all_parents.insert((j, i));
            if j0.contains(&j) || source_sets.get(&j) != source_sets.get(&i) {
                parents.insert((j, i));
            }
        }
    }
    Ok(GroundTruth {
        targets: targets.clone(),
        s_delta,
        j0,
        source_sets,
        classes,
        parents,
        all_parents,
    })
}

/// Targets found by checking every subset of the changed nodes: a node is
/// non-intervened iff some subset containing it zeroes its diagonal.
pub fn brute_force_targets(pair: &CovariancePair, epsilon: f64) -> Result<NodeSet> {
    let all: Vec<usize> = (0..pair.p()).collect();
    let s_delta = exact_precision_difference(pair, &all, epsilon)?.changed_nodes();
    let k = s_delta.len();
    if k > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            size: k,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut cleared = vec![false; k];
    for mask in 1u32..(1 << k) {
        let subset: Vec<usize> = (0..k)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| s_delta[b])
            .collect();
        let diff = exact_precision_difference(pair, &subset, epsilon)?;
        for b in 0..k {
            if mask & (1 << b) != 0 && diff.diagonal(s_delta[b]) == Some(0.0) {
                cleared[b] = true;
            }
        }
    }
    Ok((0..k).filter(|&b| !cleared[b]).map(|b| s_delta[b]).collect())
}

/// Node subsets the estimator evaluates on a population instance with the
/// given graph and targets.
pub fn queried_subsets(dag: &Dag, targets: &NodeSet) -> Vec<NodeSet> {
    let Ok(truth) = ground_truth(dag, targets) else {
        return Vec::new();
    };
    let mut out: BTreeSet<NodeSet> = BTreeSet::new();
    out.insert((0..dag.p()).collect());
    out.extend(truth.s_delta.iter().map(|&j| NodeSet::from([j])));
    for &k in truth.source_sets.keys() {
        for &j in &truth.j0 {
            out.insert(NodeSet::from([j, k]));
        }
    }
    for index in 0..truth.classes.len() {
        let (_, m) = crate::estimator::conditioning_set(&truth.classes, index);
        let members = &truth.classes[index].members;
        for mask in 0u32..(1 << members.len()) {
            let mut s: NodeSet = m.iter().copied().collect();
            s.extend((0..members.len()).filter(|b| mask & (1 << b) != 0).map(|b| members[b]));
            if !s.is_empty() {
                out.insert(s);
            }
        }
    }
    out.into_iter().collect()
}

/// Interventional equivalence class: the CPDAG of the augmented graph with
/// the `ζ` edges directed, restricted to the original nodes.
pub fn interventional_cpdag(dag: &Dag, targets: &NodeSet) -> Result<Cpdag> {
    let aug = AugmentedGraph::new(dag, targets)?;
    let z = aug.zeta();
    let forced: BTreeSet<Edge> = targets.iter().map(|&t| (z, t)).collect();
    Ok(Cpdag::from_dag_with(aug.graph(), &forced).without_last_node())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::{InterventionModel, InterventionSpec};

    fn example_one() -> Dag {
        Dag::new(5, &[(0, 2), (2, 3), (1, 3), (1, 4), (3, 4)]).unwrap()
    }

    /// All simple paths between x and y, each checked for blocking.
    fn separated_by_paths(dag: &Dag, x: usize, y: usize, z: &NodeSet) -> bool {
        fn walk(dag: &Dag, path: &mut Vec<usize>, y: usize, z: &NodeSet, open: &mut bool) {
            let v = *path.last().unwrap();
            if v == y {
                let blocked = (1..path.len() - 1).any(|i| {
                    let (a, b, c) = (path[i - 1], path[i], path[i + 1]);
                    let collider = dag.has_edge(a, b) && dag.has_edge(c, b);
                    if collider {
                        let mut d = dag.descendants(b);
                        d.insert(b);
                        d.is_disjoint(z)
                    } else {
                        z.contains(&b)
                    }
                });
                *open |= !blocked;
                return;
            }
            let next: Vec<usize> = dag
                .parents(v)
                .iter()
                .chain(dag.children(v))
                .copied()
                .filter(|u| !path.contains(u))
                .collect();
            for u in next {
                path.push(u);
                walk(dag, path, y, z, open);
                path.pop();
            }
        }
        let mut open = false;
        walk(dag, &mut vec![x], y, z, &mut open);
        !open
    }

    #[test]
    fn textbook_cases() {
        let chain = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(d_separated(&chain, 0, 2, &NodeSet::from([1])));
        assert!(!d_separated(&chain, 0, 2, &NodeSet::new()));
        let collider = Dag::new(3, &[(0, 2), (1, 2)]).unwrap();
        assert!(d_separated(&collider, 0, 1, &NodeSet::new()));
        assert!(!d_separated(&collider, 0, 1, &NodeSet::from([2])));
        assert!(d_separated(&example_one(), 0, 4, &NodeSet::from([2, 3])));
    }

    #[test]
    fn agrees_with_path_enumeration() {
        let dag = Dag::new(
            6,
            &[(0, 2), (1, 2), (2, 3), (3, 5), (1, 4), (4, 5), (0, 4)],
        )
        .unwrap();
        for x in 0..6 {
            for y in 0..6 {
                if x == y {
                    continue;
                }
                for mask in 0u32..64 {
                    if mask & (1 << x) != 0 || mask & (1 << y) != 0 {
                        continue;
                    }
                    let z: NodeSet = (0..6).filter(|b| mask & (1 << b) != 0).collect();
                    assert_eq!(
                        d_separated(&dag, x, y, &z),
                        separated_by_paths(&dag, x, y, &z),
                        "{x} {y} {z:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn invariance_on_example_one() {
        let aug = AugmentedGraph::new(&example_one(), &NodeSet::from([2, 4])).unwrap();
        assert!(invariance_oracle(&aug, 3, &NodeSet::from([0, 1, 2, 3])));
        assert!(!invariance_oracle(&aug, 3, &NodeSet::from([1, 3])));
        assert!(!invariance_oracle(&aug, 2, &NodeSet::from([0, 1, 2, 3, 4])));
    }

    #[test]
    fn example_one_ground_truth() {
        let g = ground_truth(&example_one(), &NodeSet::from([2, 4])).unwrap();
        assert_eq!(g.s_delta, NodeSet::from([0, 1, 2, 3, 4]));
        assert_eq!(g.j0, NodeSet::from([0, 1]));
        assert_eq!(g.source_sets[&2], NodeSet::from([0]));
        assert_eq!(g.source_sets[&3], NodeSet::from([0, 1]));
        assert_eq!(g.source_sets[&4], NodeSet::from([0, 1]));
        assert_eq!(
            g.class_partition(),
            BTreeSet::from([NodeSet::from([2]), NodeSet::from([3, 4])])
        );
        assert_eq!(g.parents, BTreeSet::from([(0, 2), (1, 4)]));
        assert_eq!(g.all_parents, BTreeSet::from([(0, 2), (1, 4), (3, 4)]));
    }

    #[test]
    fn trivial_ground_truths() {
        let chain = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(ground_truth(&chain, &NodeSet::new()).unwrap(), GroundTruth::default());
        let g = ground_truth(&chain, &NodeSet::from([2])).unwrap();
        assert_eq!(g.s_delta, NodeSet::from([1, 2]));
        assert_eq!(g.j0, NodeSet::from([1]));
        assert_eq!(g.classes.len(), 1);
        assert_eq!(g.parents, BTreeSet::from([(1, 2)]));
    }

    #[test]
    fn brute_force_examples() {
        let chain = LinearSem::uniform(Dag::new(2, &[(0, 1)]).unwrap(), 1.0);
        let shifted = chain
            .intervene(&InterventionSpec::new([1], InterventionModel::VARIANCE))
            .unwrap();
        let pair = CovariancePair::population(&chain, &shifted).unwrap();
        assert_eq!(brute_force_targets(&pair, 1e-8).unwrap(), NodeSet::from([1]));
        let same = CovariancePair::population(&chain, &chain).unwrap();
        assert!(brute_force_targets(&same, 1e-8).unwrap().is_empty());

        let sem1 = LinearSem::uniform(example_one(), 1.0);
        let sem2 = sem1
            .intervene(&InterventionSpec::new([2, 4], InterventionModel::VARIANCE))
            .unwrap();
        let pair = CovariancePair::population(&sem1, &sem2).unwrap();
        assert_eq!(brute_force_targets(&pair, 1e-8).unwrap(), NodeSet::from([2, 4]));
    }

    #[test]
    fn example_one_interventional_cpdag_is_the_dag() {
        let dag = example_one();
        let g = interventional_cpdag(&dag, &NodeSet::from([2, 4])).unwrap();
        assert!(g.undirected().is_empty());
        assert_eq!(g.directed(), dag.edges());
    }

    #[test]
    fn queried_subsets_cover_example_one() {
        let subsets = queried_subsets(&example_one(), &NodeSet::from([2, 4]));
        assert!(subsets.contains(&NodeSet::from([0, 1, 2, 3, 4])));
        assert!(subsets.contains(&NodeSet::from([0, 2])));
        assert!(subsets.contains(&NodeSet::from([0, 1, 2, 3])));
        assert!(subsets.iter().all(|s| !s.is_empty()));
    }
}
