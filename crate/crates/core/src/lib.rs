//! Estimation of soft-intervention targets in linear Gaussian structural
//! equation models.
//!
//! Given the second-moment matrices of an observational and an
//! interventional environment, the estimator recovers the set of nodes whose
//! noise distribution was changed together with their non-intervened
//! parents. It does so by repeatedly estimating sparse differences of
//! precision matrices on carefully chosen node subsets, instead of searching
//! over all subsets of the changed nodes.
//!
//! The crate is organised as:
//!
//! * [`sem`]: DAGs, linear SEMs, interventions, sampling and restricted
//!   (marginalised) models.
//! * [`pde`]: precision-difference estimation, an ADMM solver for the
//!   l1-penalised objective and an exact inversion backend.
//! * [`estimator`]: the multi-stage target estimator, parent finder and
//!   CPDAG refinement.
//! * [`oracle`]: graph-theoretic ground truth, d-separation and an
//!   exhaustive brute-force identifier used for validation.
//! * [`bench`]: synthetic Erdős–Rényi trials, metrics and sweeps.
//! * [`io`] and [`cli`]: file formats and the command-line front end.

pub mod bench;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod pde;
pub mod sem;

use std::collections::BTreeSet;

pub use error::{Error, Result};

/// Ordered set of node labels (0-based).
pub type NodeSet = BTreeSet<usize>;

/// Directed edge `(from, to)`.
pub type Edge = (usize, usize);

pub use estimator::{estimate_targets, EstimatorConfig, TargetEstimate};
pub use pde::{AdmmConfig, CovariancePair, MomentKind, PrecisionDiff};
pub use sem::{Dag, InterventionModel, InterventionSpec, LinearSem};
