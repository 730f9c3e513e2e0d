//! Multi-stage estimation of intervention targets and their non-intervened
//! parents from a pair of second-moment matrices.
//!
//! The stages are, in order:
//!
//! 1. one precision-difference estimate on all nodes; its nonzero diagonal
//!    gives the changed nodes `S_Δ` (targets plus their parents). Nodes of
//!    `S_Δ` whose marginal second moment is unchanged are the non-intervened
//!    sources `J₀`.
//! 2. for every `k ∈ S_Δ \ J₀` and `j ∈ J₀`, an estimate on `{j, k}`; a
//!    nonzero off-diagonal puts `j` in the source ancestral set `J₀ᵏ`. Nodes
//!    with equal source sets form equivalence classes, ordered so that no
//!    class is preceded by one whose source set strictly contains its own.
//! 3. each class `A` is processed against a conditioning set `M` built from
//!    its own sources and the earlier classes with smaller source sets. A node
//!    of `A` is non-intervened iff some `M ∪ A'` (with `A' ⊆ A` containing it)
//!    zeroes its diagonal. Parents and cross-class orientations are then read
//!    off the cached estimates without further solver calls.

mod cpdag;
mod steps;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use cpdag::{refine_cpdag, Cpdag, Refinement};
pub use steps::{
    find_changed_nodes, find_parents, find_source_nodes, find_source_nodes_by_pde,
    form_equivalence_classes, orient_cross_class_edges, process_equivalence_class,
    source_ancestral_sets, ClassOutcome, CrossClassOrientation, EquivalenceClass,
};

use crate::error::Stage;
use crate::pde::{
    estimate_precision_difference, exact_precision_difference, AdmmConfig, CovariancePair,
    MomentKind, PrecisionDiff,
};
use crate::{Edge, Error, NodeSet, Result};

/// Precision-difference backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// l1-penalised ADMM solver.
    Admm,
    /// Direct inversion of the principal blocks (population inputs).
    Exact,
}

/// How `J₀` is read off the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTest {
    /// Compare diagonal second moments (no solver calls).
    CovarianceDiagonal,
    /// One single-node precision-difference estimate per changed node.
    Pde,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub backend: Backend,
    /// l1 weight for the full-graph estimate and the class subsets.
    pub lambda1: f64,
    /// l1 weight for the pairwise source-set estimates.
    pub lambda2: f64,
    /// Parent-decision level; also the default parent threshold.
    pub lambda3: f64,
    /// Support threshold ε applied to every estimate.
    pub epsilon: f64,
    /// Threshold for parent and orientation decisions; `None` uses `lambda3`
    /// with the ADMM backend and `epsilon` with the exact backend.
    pub parent_epsilon: Option<f64>,
    /// Relative tolerance of the diagonal second-moment equality test.
    pub var_tol: f64,
    /// Largest class processed; bigger classes are an error.
    pub budget: usize,
    pub source_test: SourceTest,
    pub rho: f64,
    pub max_iter: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        let admm = AdmmConfig::default();
        EstimatorConfig {
            backend: Backend::Admm,
            lambda1: 0.1,
            lambda2: 0.05,
            lambda3: 0.05,
            epsilon: 0.015,
            parent_epsilon: None,
            var_tol: 0.05,
            budget: 15,
            source_test: SourceTest::CovarianceDiagonal,
            rho: admm.rho,
            max_iter: admm.max_iter,
            eps_abs: admm.eps_abs,
            eps_rel: admm.eps_rel,
        }
    }
}

impl EstimatorConfig {
    /// Exact backend with tolerances suited to population matrices.
    pub fn population() -> Self {
        EstimatorConfig {
            backend: Backend::Exact,
            epsilon: 1e-8,
            var_tol: 1e-8,
            ..Self::default()
        }
    }

    /// Defaults for the given input kind.
    pub fn for_kind(kind: MomentKind) -> Self {
        if kind.is_population() {
            Self::population()
        } else {
            Self::default()
        }
    }

    pub fn parent_threshold(&self) -> f64 {
        self.parent_epsilon.unwrap_or(match self.backend {
            Backend::Admm => self.lambda3,
            Backend::Exact => self.epsilon,
        })
    }

    /// Solver settings for a stage using l1 weight `lambda`.
    pub fn stage(&self, lambda: f64) -> PdeSettings {
        PdeSettings {
            backend: self.backend,
            admm: AdmmConfig {
                lambda,
                rho: self.rho,
                max_iter: self.max_iter,
                eps_abs: self.eps_abs,
                eps_rel: self.eps_rel,
                epsilon_threshold: self.epsilon,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be non-negative")));
            }
        }
        if self.var_tol.is_nan() || self.var_tol < 0.0 {
            return Err(Error::InvalidConfig("var_tol must be non-negative".into()));
        }
        if self.budget == 0 || self.budget > 30 {
            return Err(Error::InvalidConfig("budget must lie in 1..=30".into()));
        }
        if self.parent_threshold().is_nan() || self.parent_threshold() <= 0.0 {
            return Err(Error::InvalidConfig("parent threshold must be positive".into()));
        }
        self.stage(self.lambda1).admm.validate()
    }
}

/// Backend plus solver parameters for one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeSettings {
    pub backend: Backend,
    pub admm: AdmmConfig,
}

impl PdeSettings {
    pub fn exact(epsilon: f64) -> Self {
        PdeSettings {
            backend: Backend::Exact,
            admm: AdmmConfig::default().with_threshold(epsilon),
        }
    }

    pub fn admm(admm: AdmmConfig) -> Self {
        PdeSettings {
            backend: Backend::Admm,
            admm,
        }
    }

    pub fn run(&self, pair: &CovariancePair, subset: &[usize]) -> Result<PrecisionDiff> {
        match self.backend {
            Backend::Admm => estimate_precision_difference(pair, subset, &self.admm),
            Backend::Exact => exact_precision_difference(pair, subset, self.admm.epsilon_threshold),
        }
    }
}

/// Steps 1 and 2 output.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassDecomposition {
    pub s_delta: NodeSet,
    pub j0: NodeSet,
    /// `J₀ᵏ` for every `k ∈ S_Δ \ J₀`.
    pub source_sets: BTreeMap<usize, NodeSet>,
    pub classes: Vec<EquivalenceClass>,
}

impl ClassDecomposition {
    pub fn p_delta(&self) -> usize {
        self.s_delta.len()
    }

    pub fn max_class_size(&self) -> usize {
        self.classes.iter().map(|c| c.members.len()).max().unwrap_or(0)
    }
}

/// Step 3 state of one class, including every cached estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRecord {
    /// Indices of earlier classes whose source sets are strictly contained
    /// in this one's.
    pub earlier: Vec<usize>,
    /// Conditioning set `M`: own sources plus members of `earlier` classes.
    pub conditioning: Vec<usize>,
    pub outcome: ClassOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub changed_nodes: f64,
    pub source_nodes: f64,
    pub source_sets: f64,
    pub classes: f64,
    pub parents: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetEstimate {
    pub targets: NodeSet,
    /// `j -> i` with `i` a target and `j` a non-target.
    pub parents: BTreeSet<Edge>,
    pub extra_orientations: Vec<CrossClassOrientation>,
    pub decomposition: ClassDecomposition,
    pub classes: Vec<ClassRecord>,
    pub timings: StageTimings,
    pub pde_call_count: usize,
}

impl TargetEstimate {
    /// Class index of `node`, if it belongs to a class.
    pub fn class_of(&self, node: usize) -> Option<usize> {
        self.decomposition
            .classes
            .iter()
            .position(|c| c.members.contains(&node))
    }
}

/// Earlier classes `b < ℓ` whose source sets are strict subsets of class ℓ's,
/// and the resulting conditioning set.
pub fn conditioning_set(classes: &[EquivalenceClass], index: usize) -> (Vec<usize>, Vec<usize>) {
    let own = &classes[index].sources;
    let earlier: Vec<usize> = (0..index)
        .filter(|&b| classes[b].sources.is_subset(own) && classes[b].sources != *own)
        .collect();
    let mut m: NodeSet = own.clone();
    for &b in &earlier {
        m.extend(classes[b].members.iter().copied());
    }
    (earlier, m.into_iter().collect())
}

/// Runs the full estimator on a second-moment pair.
pub fn estimate_targets(pair: &CovariancePair, config: &EstimatorConfig) -> Result<TargetEstimate> {
    config.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let mut calls = 0usize;

    let t = Instant::now();
    let full_stage = config.stage(config.lambda1);
    let (s_delta, _) = find_changed_nodes(pair, &full_stage).map_err(|e| e.at(Stage::ChangedNodes))?;
    calls += 1;
    timings.changed_nodes = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let j0 = match config.source_test {
        SourceTest::CovarianceDiagonal => find_source_nodes(pair, &s_delta, config.var_tol),
        SourceTest::Pde => {
            calls += s_delta.len();
            find_source_nodes_by_pde(pair, &s_delta, &full_stage)
                .map_err(|e| e.at(Stage::SourceNodes))?
        }
    };
    timings.source_nodes = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let source_sets = source_ancestral_sets(pair, &s_delta, &j0, &config.stage(config.lambda2))
        .map_err(|e| e.at(Stage::SourceSets))?;
    calls += j0.len() * (s_delta.len() - j0.len());
    let classes = form_equivalence_classes(&source_sets);
    timings.source_sets = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut records = Vec::with_capacity(classes.len());
    for index in 0..classes.len() {
        let (earlier, conditioning) = conditioning_set(&classes, index);
        let outcome = process_equivalence_class(
            &conditioning,
            &classes[index].members,
            pair,
            &full_stage,
            config.budget,
        )
        .map_err(|e| e.at(Stage::Classes))?;
        calls += 1 << classes[index].members.len();
        records.push(ClassRecord {
            earlier,
            conditioning,
            outcome,
        });
    }
    timings.classes = t.elapsed().as_secs_f64();

    let targets: NodeSet = records
        .iter()
        .flat_map(|r| r.outcome.intervened.iter().copied())
        .collect();

    let t = Instant::now();
    let threshold = config.parent_threshold();
    let parents = find_parents(&targets, &classes, &records, threshold)
        .map_err(|e| e.at(Stage::Parents))?;
    let extra_orientations = orient_cross_class_edges(&targets, &classes, &records, threshold)
        .map_err(|e| e.at(Stage::Orientation))?;
    timings.parents = t.elapsed().as_secs_f64();
    timings.total = start.elapsed().as_secs_f64();

    Ok(TargetEstimate {
        targets,
        parents,
        extra_orientations,
        decomposition: ClassDecomposition {
            s_delta,
            j0,
            source_sets,
            classes,
        },
        classes: records,
        timings,
        pde_call_count: calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::{Dag, InterventionModel, InterventionSpec, LinearSem};

    fn example_one_pair() -> CovariancePair {
        let dag = Dag::new(5, &[(0, 2), (2, 3), (1, 3), (1, 4), (3, 4)]).unwrap();
        let sem1 = LinearSem::uniform(dag, 1.0);
        let sem2 = sem1
            .intervene(&InterventionSpec::new([2, 4], InterventionModel::VARIANCE))
            .unwrap();
        CovariancePair::population(&sem1, &sem2).unwrap()
    }

    #[test]
    fn example_one_end_to_end() {
        let est = estimate_targets(&example_one_pair(), &EstimatorConfig::population()).unwrap();
        let d = &est.decomposition;
        assert_eq!(d.s_delta, NodeSet::from([0, 1, 2, 3, 4]));
        assert_eq!(d.j0, NodeSet::from([0, 1]));
        assert_eq!(d.source_sets[&2], NodeSet::from([0]));
        assert_eq!(d.source_sets[&3], NodeSet::from([0, 1]));
        assert_eq!(d.source_sets[&4], NodeSet::from([0, 1]));
        assert_eq!(d.classes.len(), 2);
        assert_eq!(d.classes[0].members, vec![2]);
        assert_eq!(d.classes[1].members, vec![3, 4]);
        assert_eq!(est.targets, NodeSet::from([2, 4]));
        assert_eq!(est.parents, BTreeSet::from([(0, 2), (1, 4)]));
        assert_eq!(est.classes[1].conditioning, vec![0, 1, 2]);
        assert_eq!(est.pde_call_count, 1 + 2 * 3 + 2 + 4);
    }

    #[test]
    fn example_one_cross_class_decision() {
        let est = estimate_targets(&example_one_pair(), &EstimatorConfig::population()).unwrap();
        assert_eq!(
            est.extra_orientations,
            vec![CrossClassOrientation {
                from: 2,
                to: 4,
                is_parent: false
            }]
        );
    }

    #[test]
    fn identical_models_give_nothing() {
        let sem = LinearSem::uniform(Dag::new(3, &[(0, 1), (1, 2)]).unwrap(), 0.7);
        let pair = CovariancePair::population(&sem, &sem).unwrap();
        let est = estimate_targets(&pair, &EstimatorConfig::population()).unwrap();
        assert!(est.targets.is_empty());
        assert!(est.parents.is_empty());
        assert!(est.decomposition.s_delta.is_empty());
        assert_eq!(est.pde_call_count, 1);
    }

    #[test]
    fn pde_source_test_agrees_and_counts_calls() {
        let cfg = EstimatorConfig {
            source_test: SourceTest::Pde,
            ..EstimatorConfig::population()
        };
        let est = estimate_targets(&example_one_pair(), &cfg).unwrap();
        assert_eq!(est.decomposition.j0, NodeSet::from([0, 1]));
        assert_eq!(est.pde_call_count, 1 + 5 + 2 * 3 + 2 + 4);
    }

    #[test]
    fn stage_errors_are_annotated() {
        let cfg = EstimatorConfig {
            budget: 1,
            ..EstimatorConfig::population()
        };
        let err = estimate_targets(&example_one_pair(), &cfg).unwrap_err();
        assert!(matches!(
            err,
            Error::Stage {
                stage: Stage::Classes,
                ..
            }
        ));
        assert!(matches!(err.root(), Error::ClassTooLarge { size: 2, budget: 1 }));
    }
}
