//! Precision-difference estimation.
//!
//! Both backends return a [`PrecisionDiff`] on a node subset, symmetrised and
//! hard-thresholded: entries with `|Δ_ij| < ε` are set to zero, entries equal
//! to `ε` are kept.

mod admm;
mod constants;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use admm::{estimate_precision_difference, objective, solve_admm, AdmmConfig};
pub use constants::{complexity_constants, ComplexityConstants};

use crate::linalg::{is_symmetric, max_abs, principal_submatrix, spd_inverse, symmetrize};
use crate::sem::LinearSem;
use crate::{Edge, Error, Result};

/// Provenance of a pair of second-moment matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentKind {
    Population,
    /// Uncentered `XᵀX / n`.
    EmpiricalMoment,
    /// Column-centered `XᵀX / n`.
    EmpiricalCentered,
}

impl MomentKind {
    pub fn is_population(self) -> bool {
        self == MomentKind::Population
    }
}

/// Observational and interventional second-moment matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePair {
    sigma1: DMatrix<f64>,
    sigma2: DMatrix<f64>,
    /// Sample counts; 0 for population matrices.
    pub n1: usize,
    pub n2: usize,
    pub kind: MomentKind,
}

impl CovariancePair {
    pub fn new(
        sigma1: DMatrix<f64>,
        sigma2: DMatrix<f64>,
        n1: usize,
        n2: usize,
        kind: MomentKind,
    ) -> Result<Self> {
        if !sigma1.is_square() || sigma1.shape() != sigma2.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} and {}x{} second-moment matrices",
                sigma1.nrows(),
                sigma1.ncols(),
                sigma2.nrows(),
                sigma2.ncols()
            )));
        }
        for (name, m) in [("first", &sigma1), ("second", &sigma2)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput(format!("{name} matrix")));
            }
            let tol = 1e-10 * max_abs(m).max(1.0);
            if !is_symmetric(m, tol) {
                return Err(Error::InvalidConfig(format!("{name} matrix is not symmetric")));
            }
        }
        Ok(CovariancePair {
            sigma1: symmetrize(&sigma1),
            sigma2: symmetrize(&sigma2),
            n1,
            n2,
            kind,
        })
    }

    /// Exact uncentered second moments of two models. Mean shifts stay
    /// visible through the `μμᵀ` term.
    pub fn population(sem1: &LinearSem, sem2: &LinearSem) -> Result<Self> {
        Self::new(
            sem1.second_moment(),
            sem2.second_moment(),
            0,
            0,
            MomentKind::Population,
        )
    }

    /// Exact covariances (means ignored).
    pub fn population_centered(sem1: &LinearSem, sem2: &LinearSem) -> Result<Self> {
        Self::new(sem1.covariance(), sem2.covariance(), 0, 0, MomentKind::Population)
    }

    /// Second moments of two `n × p` data matrices.
    pub fn from_samples(x1: &DMatrix<f64>, x2: &DMatrix<f64>, centered: bool) -> Result<Self> {
        if x1.ncols() != x2.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "data sets with {} and {} columns",
                x1.ncols(),
                x2.ncols()
            )));
        }
        if x1.nrows() == 0 || x2.nrows() == 0 {
            return Err(Error::DimensionMismatch("empty data set".into()));
        }
        let kind = if centered {
            MomentKind::EmpiricalCentered
        } else {
            MomentKind::EmpiricalMoment
        };
        Self::new(
            second_moments(x1, centered),
            second_moments(x2, centered),
            x1.nrows(),
            x2.nrows(),
            kind,
        )
    }

    pub fn p(&self) -> usize {
        self.sigma1.nrows()
    }

    pub fn sigma1(&self) -> &DMatrix<f64> {
        &self.sigma1
    }

    pub fn sigma2(&self) -> &DMatrix<f64> {
        &self.sigma2
    }

    /// Principal blocks of both matrices on `subset`.
    pub fn blocks(&self, subset: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
        (
            principal_submatrix(&self.sigma1, subset),
            principal_submatrix(&self.sigma2, subset),
        )
    }
}

/// `XᵀX / n`, optionally after centering each column.
pub fn second_moments(x: &DMatrix<f64>, centered: bool) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let m = if centered {
        let mut c = x.clone();
        for mut col in c.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        c.transpose() * c
    } else {
        x.transpose() * x
    };
    symmetrize(&(m / n))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Stopping thresholds in force at the last iteration.
    pub primal_tolerance: f64,
    pub dual_tolerance: f64,
    pub converged: bool,
}

/// Estimated `Θ⁽¹⁾ - Θ⁽²⁾` on a node subset.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionDiff {
    subset: Vec<usize>,
    delta: DMatrix<f64>,
    support: BTreeSet<Edge>,
    pub diagnostics: SolverDiagnostics,
}

impl PrecisionDiff {
    /// Symmetrises and thresholds `raw`, a `|subset| × |subset|` estimate.
    pub fn from_raw(
        subset: Vec<usize>,
        raw: &DMatrix<f64>,
        epsilon: f64,
        diagnostics: SolverDiagnostics,
    ) -> Self {
        let delta = postprocess(raw, epsilon);
        let support = support_of(&subset, &delta);
        PrecisionDiff {
            subset,
            delta,
            support,
            diagnostics,
        }
    }

    /// Estimate on the empty subset.
    pub fn empty() -> Self {
        PrecisionDiff {
            subset: Vec::new(),
            delta: DMatrix::zeros(0, 0),
            support: BTreeSet::new(),
            diagnostics: SolverDiagnostics {
                converged: true,
                ..Default::default()
            },
        }
    }

    /// Global node labels, ascending; local index `a` is `subset()[a]`.
    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn delta(&self) -> &DMatrix<f64> {
        &self.delta
    }

    /// Nonzero entries as global `(row, column)` pairs; symmetric.
    pub fn support(&self) -> &BTreeSet<Edge> {
        &self.support
    }

    fn local(&self, node: usize) -> Option<usize> {
        self.subset.binary_search(&node).ok()
    }

    /// Entry at global labels `(i, j)`, or `None` if either is outside the subset.
    pub fn entry(&self, i: usize, j: usize) -> Option<f64> {
        Some(self.delta[(self.local(i)?, self.local(j)?)])
    }

    pub fn diagonal(&self, i: usize) -> Option<f64> {
        self.entry(i, i)
    }

    /// Nonzero diagonal entries (global labels).
    pub fn changed_nodes(&self) -> Vec<usize> {
        self.subset
            .iter()
            .enumerate()
            .filter(|&(a, _)| self.delta[(a, a)] != 0.0)
            .map(|(_, &v)| v)
            .collect()
    }
}

/// `(Δ + Δᵀ)/2`, then zero every entry with `|·| < ε`.
pub fn postprocess(raw: &DMatrix<f64>, epsilon: f64) -> DMatrix<f64> {
    let mut delta = symmetrize(raw);
    delta.iter_mut().for_each(|v| {
        if v.abs() < epsilon {
            *v = 0.0;
        }
    });
    delta
}

fn support_of(subset: &[usize], delta: &DMatrix<f64>) -> BTreeSet<Edge> {
    let k = subset.len();
    let mut support = BTreeSet::new();
    for a in 0..k {
        for b in 0..k {
            if delta[(a, b)] != 0.0 {
                support.insert((subset[a], subset[b]));
            }
        }
    }
    support
}

/// Sorted, deduplicated, range-checked copy of a subset.
pub(crate) fn normalize_subset(subset: &[usize], p: usize) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut nodes = subset.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    if let Some(&index) = nodes.iter().find(|&&v| v >= p) {
        return Err(Error::IndexOutOfRange { index, p });
    }
    Ok(nodes)
}

/// `(Σ⁽¹⁾_SS)⁻¹ - (Σ⁽²⁾_SS)⁻¹` before post-processing.
pub fn exact_difference_raw(pair: &CovariancePair, subset: &[usize]) -> Result<DMatrix<f64>> {
    let nodes = normalize_subset(subset, pair.p())?;
    let (s1, s2) = pair.blocks(&nodes);
    Ok(spd_inverse(&s1, &nodes)? - spd_inverse(&s2, &nodes)?)
}

/// Inversion-based estimate for population inputs.
pub fn exact_precision_difference(
    pair: &CovariancePair,
    subset: &[usize],
    epsilon: f64,
) -> Result<PrecisionDiff> {
    let nodes = normalize_subset(subset, pair.p())?;
    let raw = exact_difference_raw(pair, &nodes)?;
    Ok(PrecisionDiff::from_raw(
        nodes,
        &raw,
        epsilon,
        SolverDiagnostics {
            converged: true,
            ..Default::default()
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::{Dag, InterventionModel, InterventionSpec};

    fn chain_pair() -> CovariancePair {
        let s1 = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
        let s2 = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 3.0]);
        CovariancePair::new(s1, s2, 0, 0, MomentKind::Population).unwrap()
    }

    #[test]
    fn identical_pair_gives_zero() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let pair = CovariancePair::new(s.clone(), s, 0, 0, MomentKind::Population).unwrap();
        let d = exact_precision_difference(&pair, &[0, 1], 1e-8).unwrap();
        assert!(d.support().is_empty());
        assert_eq!(max_abs(d.delta()), 0.0);
    }

    #[test]
    fn chain_difference_is_exact() {
        // Θ⁽¹⁾ = [[2,-1],[-1,1]], Θ⁽²⁾ = [[1.5,-0.5],[-0.5,0.5]].
        let d = exact_precision_difference(&chain_pair(), &[0, 1], 1e-8).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!(max_abs(&(d.delta() - want)) < 1e-14);
        assert_eq!(d.support().len(), 4);
    }

    #[test]
    fn example_one_subset_entries() {
        // Example graph 0->2, 2->3, 1->3, 1->4, 3->4 with variance
        // interventions on {2, 4}; on {0, 2} only the restricted noise of 2
        // changes: Θ_S = [[1 + b²/σ², -b/σ²], [-b/σ², 1/σ²]] with b = 1.
        let dag = Dag::new(5, &[(0, 2), (2, 3), (1, 3), (1, 4), (3, 4)]).unwrap();
        let sem1 = LinearSem::uniform(dag, 1.0);
        let sem2 = sem1
            .intervene(&InterventionSpec::new([2, 4], InterventionModel::VARIANCE))
            .unwrap();
        let pair = CovariancePair::population(&sem1, &sem2).unwrap();
        let d = exact_precision_difference(&pair, &[0, 2], 1e-8).unwrap();
        assert!((d.diagonal(2).unwrap() - 0.5).abs() < 1e-12);
        assert!((d.diagonal(0).unwrap() - 0.5).abs() < 1e-12);
        assert!((d.entry(0, 2).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn threshold_keeps_boundary_entries() {
        let raw = DMatrix::from_row_slice(2, 2, &[0.1, 0.05, 0.05, 0.099]);
        let out = postprocess(&raw, 0.1);
        assert_eq!(out[(0, 0)], 0.1);
        assert_eq!(out[(1, 1)], 0.0);
        assert_eq!(out[(0, 1)], 0.0);
        assert_eq!(postprocess(&out, 0.1), out);
    }

    #[test]
    fn rejects_bad_pairs() {
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(
            CovariancePair::new(a.clone(), b, 0, 0, MomentKind::Population),
            Err(Error::DimensionMismatch(_))
        ));
        let mut nan = a.clone();
        nan[(0, 0)] = f64::NAN;
        assert!(matches!(
            CovariancePair::new(a, nan, 0, 0, MomentKind::Population),
            Err(Error::NonFiniteInput(_))
        ));
    }

    #[test]
    fn singular_block_is_reported() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let pair = CovariancePair::new(s.clone(), s, 0, 0, MomentKind::Population).unwrap();
        assert!(matches!(
            exact_precision_difference(&pair, &[0, 1], 1e-8),
            Err(Error::SingularSubmatrix(_))
        ));
    }

    #[test]
    fn centered_moments_remove_the_mean() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!((second_moments(&x, false)[(0, 0)] - 14.0 / 3.0).abs() < 1e-14);
        assert!((second_moments(&x, true)[(0, 0)] - 2.0 / 3.0).abs() < 1e-14);
    }
}
