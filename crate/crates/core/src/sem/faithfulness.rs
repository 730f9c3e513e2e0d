//! Checkable form of the intervention-faithfulness assumption.
//!
//! Three conditions are tested on every subset `S` selected by the policy,
//! where "differs" means an absolute difference larger than `tol`:
//!
//! 1. a node whose noise variance changed keeps a changed restricted noise
//!    variance in `S`;
//! 2. a changed restricted noise variance shows up on the diagonal of the
//!    marginal precision `Θ_S`;
//! 3. for a changed node `i`, a nonzero restricted weight `j -> i` in either
//!    model shows up as a changed entry `Θ_S[i, j]`.
//!
//! Condition 3 is only checked for changed `i`. Read literally it would also
//! cover untouched edges, whose precision entries are always equal.
//!
//! A fourth condition guards the decisions made from exact population
//! matrices: every diagonal difference of `Θ_S` is either a structural zero
//! (below [`ZERO_FLOOR`]) or larger than `tol`. Path cancellations can leave a
//! nonzero but tiny difference that no threshold separates from zero.

use serde::{Deserialize, Serialize};

use super::{changed_nodes, LinearSem};
use crate::linalg::{principal_submatrix, spd_inverse};
use crate::{Error, NodeSet, Result};

/// Differences below this are treated as exact zeros by condition 4.
pub const ZERO_FLOOR: f64 = 1e-11;

/// Largest graph the exhaustive policy accepts.
pub const EXHAUSTIVE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetPolicy {
    /// Every nonempty subset of the nodes.
    Exhaustive,
    /// Only the subsets the target estimator evaluates on this instance.
    Queried,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: u8,
    pub subset: Vec<usize>,
    pub pair: (usize, usize),
    /// Size of the difference that should have been nonzero.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FaithfulnessReport {
    pub holds: bool,
    pub violations: Vec<Violation>,
}

pub fn check_i_faithfulness(
    sem1: &LinearSem,
    sem2: &LinearSem,
    policy: SubsetPolicy,
    tol: f64,
) -> Result<FaithfulnessReport> {
    let p = sem1.p();
    if sem2.p() != p {
        return Err(Error::DimensionMismatch(format!(
            "models over {p} and {} nodes",
            sem2.p()
        )));
    }
    let subsets: Vec<NodeSet> = match policy {
        SubsetPolicy::Exhaustive => {
            if p > EXHAUSTIVE_LIMIT {
                return Err(Error::TooLarge {
                    size: p,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
            (1u32..(1 << p))
                .map(|mask| (0..p).filter(|&v| mask & (1 << v) != 0).collect())
                .collect()
        }
        SubsetPolicy::Queried => {
            let targets = changed_nodes(sem1, sem2);
            crate::oracle::queried_subsets(sem1.dag(), &targets)
        }
    };

    let targets = changed_nodes(sem1, sem2);
    let sigma1 = sem1.covariance();
    let sigma2 = sem2.covariance();
    let mut violations = Vec::new();
    for subset in &subsets {
        check_subset(
            sem1,
            sem2,
            &sigma1,
            &sigma2,
            &targets,
            subset,
            tol,
            &mut violations,
        )?;
    }
    Ok(FaithfulnessReport {
        holds: violations.is_empty(),
        violations,
    })
}

#[allow(clippy::too_many_arguments)]
fn check_subset(
    sem1: &LinearSem,
    sem2: &LinearSem,
    sigma1: &nalgebra::DMatrix<f64>,
    sigma2: &nalgebra::DMatrix<f64>,
    targets: &NodeSet,
    subset: &NodeSet,
    tol: f64,
    out: &mut Vec<Violation>,
) -> Result<()> {
    let nodes: Vec<usize> = subset.iter().copied().collect();
    let r1 = sem1.restricted(subset)?;
    let r2 = sem2.restricted(subset)?;
    let theta1 = spd_inverse(&principal_submatrix(sigma1, &nodes), &nodes)?;
    let theta2 = spd_inverse(&principal_submatrix(sigma2, &nodes), &nodes)?;

    for (a, &i) in nodes.iter().enumerate() {
        let var_diff = (sem1.noise_var()[i] - sem2.noise_var()[i]).abs();
        let restricted_diff = (r1.noise_var()[a] - r2.noise_var()[a]).abs();
        if var_diff > tol && restricted_diff <= tol {
            out.push(Violation {
                condition: 1,
                subset: nodes.clone(),
                pair: (i, i),
                magnitude: restricted_diff,
            });
        }
        let diag_diff = (theta1[(a, a)] - theta2[(a, a)]).abs();
        if restricted_diff > tol && diag_diff <= tol {
            out.push(Violation {
                condition: 2,
                subset: nodes.clone(),
                pair: (i, i),
                magnitude: diag_diff,
            });
        } else if diag_diff > ZERO_FLOOR && diag_diff <= tol {
            out.push(Violation {
                condition: 4,
                subset: nodes.clone(),
                pair: (i, i),
                magnitude: diag_diff,
            });
        }
        if !targets.contains(&i) {
            continue;
        }
        for (b, &j) in nodes.iter().enumerate() {
            if b == a {
                continue;
            }
            let linked = r1.weights()[(b, a)].abs() > tol || r2.weights()[(b, a)].abs() > tol;
            let entry_diff = (theta1[(a, b)] - theta2[(a, b)]).abs();
            if linked && entry_diff <= tol {
                out.push(Violation {
                    condition: 3,
                    subset: nodes.clone(),
                    pair: (i, j),
                    magnitude: entry_diff,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::{Dag, InterventionModel, InterventionSpec};

    #[test]
    fn identical_models_are_vacuously_faithful() {
        let sem = LinearSem::uniform(Dag::new(3, &[(0, 1), (1, 2)]).unwrap(), 0.8);
        let report = check_i_faithfulness(&sem, &sem, SubsetPolicy::Exhaustive, 1e-8).unwrap();
        assert!(report.holds);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn path_cancellation_is_flagged() {
        // Triangle 0->1, 0->2, 1->2 with unit weights: Θ_01 = -1 + 1 = 0 in
        // both models when σ_1² and σ_2² are scaled together.
        let sem1 = LinearSem::uniform(Dag::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap(), 1.0);
        let sem2 = sem1
            .intervene(&InterventionSpec::new([1, 2], InterventionModel::VARIANCE))
            .unwrap();
        assert_eq!(sem1.precision()[(0, 1)], 0.0);
        assert_eq!(sem2.precision()[(0, 1)], 0.0);
        let report = check_i_faithfulness(&sem1, &sem2, SubsetPolicy::Exhaustive, 1e-8).unwrap();
        assert!(!report.holds);
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition == 3 && v.subset == vec![0, 1, 2] && v.pair == (1, 0)));
    }

    #[test]
    fn single_target_triangle_is_faithful() {
        let sem1 = LinearSem::uniform(Dag::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap(), 1.0);
        let sem2 = sem1
            .intervene(&InterventionSpec::new([2], InterventionModel::VARIANCE))
            .unwrap();
        let report = check_i_faithfulness(&sem1, &sem2, SubsetPolicy::Exhaustive, 1e-8).unwrap();
        assert!(report.holds, "{:?}", report.violations);
    }

    #[test]
    fn near_cancellation_is_flagged() {
        // 0 -> 1 -> 2 and 0 -> 2 with the two paths nearly cancelling; the
        // diagonal at 0 on {0, 2} then moves by a tiny amount only.
        let sem1 = LinearSem::from_weighted_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, -1.0 + 1e-4)], vec![1.0; 3])
            .unwrap();
        let sem2 = sem1
            .intervene(&InterventionSpec::new([2], InterventionModel::VARIANCE))
            .unwrap();
        let report = check_i_faithfulness(&sem1, &sem2, SubsetPolicy::Exhaustive, 1e-6).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition == 4 && v.subset == vec![0, 2] && v.pair == (0, 0)));
    }

    #[test]
    fn exhaustive_policy_is_capped() {
        let sem = LinearSem::uniform(Dag::empty(13), 1.0);
        assert!(matches!(
            check_i_faithfulness(&sem, &sem, SubsetPolicy::Exhaustive, 1e-8),
            Err(Error::TooLarge { size: 13, limit: 12 })
        ));
    }
}
