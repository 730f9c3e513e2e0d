//! Sample-complexity constants of the precision-difference estimator.
//!
//! `Γ = Σ⁽²⁾ ⊗ Σ⁽¹⁾` is never materialised: entry `((a,b),(c,d))` is
//! `Σ⁽²⁾[a,c] · Σ⁽¹⁾[b,d]`, with the pair `(a,b)` flattened as `a·p + b`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::CovariancePair;
use crate::linalg::{max_abs, max_row_sum};
use crate::sem::Dag;
use crate::{Edge, Error, NodeSet, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityConstants {
    /// Largest degree (in + out) of a target node.
    pub max_target_degree: usize,
    /// `1 - max_{e ∉ S} ‖Γ_{e,S} Γ_{S,S}⁻¹‖₁`; 1 for an empty support.
    pub alpha: f64,
    /// `alpha <= 0`.
    pub incoherence_violated: bool,
    /// Largest absolute entry of either second-moment matrix.
    pub m: f64,
    /// Largest induced infinity norm of either second-moment matrix.
    pub m_sigma: f64,
    /// Largest induced infinity norm of `Γ_{S,S}` or its transpose.
    pub m_gamma: f64,
    pub support_size: usize,
}

pub fn complexity_constants(
    pair: &CovariancePair,
    support: &BTreeSet<Edge>,
    dag: &Dag,
    targets: &NodeSet,
) -> Result<ComplexityConstants> {
    let p = pair.p();
    if dag.p() != p {
        return Err(Error::DimensionMismatch(format!(
            "graph over {} nodes, matrices over {p}",
            dag.p()
        )));
    }
    if let Some(&(a, b)) = support.iter().find(|&&(a, b)| a >= p || b >= p) {
        return Err(Error::IndexOutOfRange { index: a.max(b), p });
    }
    let s1 = pair.sigma1();
    let s2 = pair.sigma2();
    let gamma = |(a, b): Edge, (c, d): Edge| s2[(a, c)] * s1[(b, d)];

    let max_target_degree = targets.iter().map(|&t| dag.degree(t)).max().unwrap_or(0);
    let m = max_abs(s1).max(max_abs(s2));
    let m_sigma = max_row_sum(s1).max(max_row_sum(s2));

    let entries: Vec<Edge> = support.iter().copied().collect();
    let s = entries.len();
    if s == 0 {
        return Ok(ComplexityConstants {
            max_target_degree,
            alpha: 1.0,
            incoherence_violated: false,
            m,
            m_sigma,
            m_gamma: 0.0,
            support_size: 0,
        });
    }

    let block = DMatrix::from_fn(s, s, |r, c| gamma(entries[r], entries[c]));
    let m_gamma = max_row_sum(&block).max(max_row_sum(&block.transpose()));
    let inv = block.clone().try_inverse().ok_or(Error::SingularGammaBlock)?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularGammaBlock);
    }

    let mut worst: f64 = 0.0;
    let mut row = DMatrix::<f64>::zeros(1, s);
    for a in 0..p {
        for b in 0..p {
            if support.contains(&(a, b)) {
                continue;
            }
            for (c, &e) in entries.iter().enumerate() {
                row[(0, c)] = gamma((a, b), e);
            }
            let l1: f64 = (&row * &inv).iter().map(|v| v.abs()).sum();
            worst = worst.max(l1);
        }
    }
    let alpha = 1.0 - worst;
    Ok(ComplexityConstants {
        max_target_degree,
        alpha,
        incoherence_violated: alpha <= 0.0,
        m,
        m_sigma,
        m_gamma,
        support_size: s,
    })
}
