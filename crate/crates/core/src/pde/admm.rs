//! ADMM for the l1-penalised precision-difference objective
//!
//! ```text
//! minimise  ½ tr(Δᵀ Σ₁ Δ Σ₂) − tr(Δ (Σ₂ − Σ₁)) + λ‖Δ‖₁
//! ```
//!
//! whose unpenalised stationary point `Σ₁ Δ Σ₂ = Σ₂ − Σ₁` is
//! `Δ = Σ₁⁻¹ − Σ₂⁻¹`. The problem is split as `Δ = Z`:
//!
//! * Δ-step: `Σ₁ Δ Σ₂ + ρΔ = (Σ₂ − Σ₁) + ρ(Z − U)`, solved in the eigenbases
//!   of `Σ₁ = Q₁Λ₁Q₁ᵀ` and `Σ₂ = Q₂Λ₂Q₂ᵀ` by elementwise division with
//!   `λ₁ᵢλ₂ⱼ + ρ`;
//! * Z-step: soft-thresholding of `Δ + U` at `λ/ρ`;
//! * U-step: `U += Δ − Z`.
//!
//! The eigendecompositions are computed once per call, so the cost is
//! `O(p³)` setup plus four `p × p` products per iteration. No inverse of
//! `Σ̂` is ever formed, so singular sample matrices (`n < p`) are fine.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{normalize_subset, CovariancePair, PrecisionDiff, SolverDiagnostics};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    /// l1 weight.
    pub lambda: f64,
    /// Augmented-Lagrangian penalty.
    pub rho: f64,
    pub max_iter: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Support cut-off applied after symmetrisation.
    pub epsilon_threshold: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            lambda: 0.2,
            rho: 1.0,
            max_iter: 2000,
            eps_abs: 1e-6,
            eps_rel: 1e-4,
            epsilon_threshold: 0.1,
        }
    }
}

impl AdmmConfig {
    pub fn with_lambda(self, lambda: f64) -> Self {
        AdmmConfig { lambda, ..self }
    }

    pub fn with_threshold(self, epsilon_threshold: f64) -> Self {
        AdmmConfig {
            epsilon_threshold,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be a finite non-negative number");
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return bad("stopping tolerances must be positive");
        }
        if !(self.epsilon_threshold > 0.0 && self.epsilon_threshold.is_finite()) {
            return bad("threshold must be positive");
        }
        Ok(())
    }
}

/// Objective value at `delta` for the given second-moment blocks.
pub fn objective(s1: &DMatrix<f64>, s2: &DMatrix<f64>, delta: &DMatrix<f64>, lambda: f64) -> f64 {
    let quad = 0.5 * (delta.transpose() * s1 * delta * s2).trace();
    let linear = (delta * (s2 - s1)).trace();
    let l1: f64 = delta.iter().map(|v| v.abs()).sum();
    quad - linear + lambda * l1
}

/// Runs ADMM on the blocks `s1`, `s2` and returns the sparse iterate `Z`
/// before any post-processing.
pub fn solve_admm(
    s1: &DMatrix<f64>,
    s2: &DMatrix<f64>,
    config: &AdmmConfig,
) -> Result<(DMatrix<f64>, SolverDiagnostics)> {
    config.validate()?;
    let p = s1.nrows();
    if s1.shape() != s2.shape() || !s1.is_square() {
        return Err(Error::DimensionMismatch("second-moment blocks differ in shape".into()));
    }
    if s1.iter().chain(s2.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("second-moment block".into()));
    }

    let eig1 = SymmetricEigen::new(s1.clone());
    let eig2 = SymmetricEigen::new(s2.clone());
    let q1 = eig1.eigenvectors;
    let q2 = eig2.eigenvectors;
    let q1t = q1.transpose();
    let q2t = q2.transpose();
    let rho = config.rho;
    // Rounding can leave PSD eigenvalues slightly negative.
    let denom = DMatrix::from_fn(p, p, |i, j| {
        eig1.eigenvalues[i].max(0.0) * eig2.eigenvalues[j].max(0.0) + rho
    });
    let rotated_rhs = &q1t * (s2 - s1) * &q2;
    let shrink = config.lambda / rho;

    let mut z = DMatrix::<f64>::zeros(p, p);
    let mut u = DMatrix::<f64>::zeros(p, p);
    let mut delta = DMatrix::<f64>::zeros(p, p);
    let mut w = DMatrix::<f64>::zeros(p, p);
    let mut tmp = DMatrix::<f64>::zeros(p, p);
    let mut rotated = DMatrix::<f64>::zeros(p, p);
    let mut diag = SolverDiagnostics::default();

    for iter in 1..=config.max_iter {
        // Δ-step in the rotated basis.
        w.copy_from(&z);
        w -= &u;
        tmp.gemm(1.0, &q1t, &w, 0.0);
        rotated.gemm(1.0, &tmp, &q2, 0.0);
        rotated.zip_zip_apply(&rotated_rhs, &denom, |r, rhs, d| *r = (rhs + rho * *r) / d);
        tmp.gemm(1.0, &q1, &rotated, 0.0);
        delta.gemm(1.0, &tmp, &q2t, 0.0);

        // Z-step; keep the previous Z in `w` for the dual residual.
        w.copy_from(&z);
        z.zip_zip_apply(&delta, &u, |zv, d, uv| *zv = soft_threshold(d + uv, shrink));

        // U-step.
        u += &delta;
        u -= &z;

        let primal = (&delta - &z).norm();
        let dual = rho * (&z - &w).norm();
        let primal_tol = config.eps_abs + config.eps_rel * delta.norm().max(z.norm());
        let dual_tol = config.eps_abs + config.eps_rel * rho * u.norm();
        diag = SolverDiagnostics {
            iterations: iter,
            primal_residual: primal,
            dual_residual: dual,
            primal_tolerance: primal_tol,
            dual_tolerance: dual_tol,
            converged: primal <= primal_tol && dual <= dual_tol,
        };
        if diag.converged {
            break;
        }
    }
    Ok((z, diag))
}

#[inline]
fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Sparse estimate of `Θ⁽¹⁾ − Θ⁽²⁾` on `subset`. Only the `subset` blocks of
/// the pair are read. Returns normally when `max_iter` is hit; check
/// `diagnostics.converged`.
pub fn estimate_precision_difference(
    pair: &CovariancePair,
    subset: &[usize],
    config: &AdmmConfig,
) -> Result<PrecisionDiff> {
    let nodes = normalize_subset(subset, pair.p())?;
    let (s1, s2) = pair.blocks(&nodes);
    let (raw, diagnostics) = solve_admm(&s1, &s2, config)?;
    Ok(PrecisionDiff::from_raw(
        nodes,
        &raw,
        config.epsilon_threshold,
        diagnostics,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::pde::{exact_difference_raw, MomentKind};

    fn pair(s1: &[f64], s2: &[f64], p: usize) -> CovariancePair {
        CovariancePair::new(
            DMatrix::from_row_slice(p, p, s1),
            DMatrix::from_row_slice(p, p, s2),
            0,
            0,
            MomentKind::Population,
        )
        .unwrap()
    }

    fn tight(lambda: f64, eps: f64) -> AdmmConfig {
        AdmmConfig {
            lambda,
            epsilon_threshold: eps,
            eps_abs: 1e-10,
            eps_rel: 1e-10,
            max_iter: 20_000,
            ..AdmmConfig::default()
        }
    }

    #[test]
    fn equal_inputs_give_empty_support() {
        let s = [2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 1.5];
        let d = estimate_precision_difference(&pair(&s, &s, 3), &[0, 1, 2], &tight(0.01, 0.1))
            .unwrap();
        assert!(d.support().is_empty());
        assert_eq!(max_abs(d.delta()), 0.0);
    }

    #[test]
    fn diagonal_inputs() {
        let p = pair(&[1.0, 0.0, 0.0, 2.0], &[1.0, 0.0, 0.0, 4.0], 2);
        let d = estimate_precision_difference(&p, &[0, 1], &tight(1e-6, 0.05)).unwrap();
        assert!((d.delta()[(1, 1)] - 0.25).abs() < 1e-4, "{}", d.delta());
        assert_eq!(d.support().iter().copied().collect::<Vec<_>>(), vec![(1, 1)]);
    }

    #[test]
    fn chain_inputs_match_inversion() {
        let p = pair(&[1.0, 1.0, 1.0, 2.0], &[1.0, 1.0, 1.0, 3.0], 2);
        let d = estimate_precision_difference(&p, &[0, 1], &tight(1e-7, 1e-3)).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!(max_abs(&(d.delta() - want)) < 1e-4, "{}", d.delta());
    }

    #[test]
    fn kkt_conditions_hold_at_the_solution() {
        let p = pair(
            &[2.0, 0.6, 0.2, 0.6, 1.5, 0.3, 0.2, 0.3, 1.0],
            &[2.5, 0.6, 0.4, 0.6, 1.2, 0.3, 0.4, 0.3, 1.3],
            3,
        );
        let lambda = 0.05;
        let (s1, s2) = p.blocks(&[0, 1, 2]);
        let (z, diag) = solve_admm(&s1, &s2, &tight(lambda, 0.1)).unwrap();
        assert!(diag.converged);
        let grad = &s1 * &z * &s2 - (&s2 - &s1);
        for ((g, v), _) in grad.iter().zip(z.iter()).zip(0..) {
            if *v != 0.0 {
                assert!((g + lambda * v.signum()).abs() < 1e-6, "g={g} v={v}");
            } else {
                assert!(g.abs() <= lambda + 1e-6, "g={g}");
            }
        }
        let zero = DMatrix::zeros(3, 3);
        assert!(objective(&s1, &s2, &z, lambda) <= objective(&s1, &s2, &zero, lambda));
    }

    #[test]
    fn singular_sample_blocks_are_accepted() {
        // Rank-one second-moment matrices (a single observation).
        let s1 = [1.0, 2.0, 2.0, 4.0];
        let s2 = [1.0, 1.0, 1.0, 1.0];
        let d = estimate_precision_difference(&pair(&s1, &s2, 2), &[0, 1], &AdmmConfig::default())
            .unwrap();
        assert!(d.delta().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn locality_matches_standalone_problem() {
        let big = pair(
            &[2.0, 0.6, 0.2, 0.6, 1.5, 0.3, 0.2, 0.3, 1.0],
            &[2.5, 0.6, 0.4, 0.6, 1.2, 0.3, 0.4, 0.3, 1.3],
            3,
        );
        let small = pair(&[2.0, 0.2, 0.2, 1.0], &[2.5, 0.4, 0.4, 1.3], 2);
        let cfg = tight(0.01, 0.01);
        let a = estimate_precision_difference(&big, &[2, 0], &cfg).unwrap();
        let b = estimate_precision_difference(&small, &[0, 1], &cfg).unwrap();
        assert_eq!(a.delta(), b.delta());
        assert_eq!(a.subset(), &[0, 2]);
    }

    #[test]
    fn small_lambda_tracks_exact_difference() {
        let p = pair(
            &[2.0, 0.6, 0.2, 0.6, 1.5, 0.3, 0.2, 0.3, 1.0],
            &[2.5, 0.6, 0.4, 0.6, 1.2, 0.3, 0.4, 0.3, 1.3],
            3,
        );
        let (s1, s2) = p.blocks(&[0, 1, 2]);
        let (z, _) = solve_admm(&s1, &s2, &AdmmConfig::default().with_lambda(1e-5)).unwrap();
        let exact = exact_difference_raw(&p, &[0, 1, 2]).unwrap();
        assert!(max_abs(&(z - exact)) < 1e-3);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let p = pair(&[1.0], &[2.0], 1);
        let cfg = AdmmConfig {
            rho: 0.0,
            ..AdmmConfig::default()
        };
        assert!(matches!(
            estimate_precision_difference(&p, &[0], &cfg),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            estimate_precision_difference(&p, &[], &AdmmConfig::default()),
            Err(Error::EmptySubset)
        ));
    }
}
