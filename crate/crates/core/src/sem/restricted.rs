use nalgebra::{DMatrix, DVector};

use super::LinearSem;
use crate::linalg::{principal_submatrix, spd_inverse};
use crate::{Error, NodeSet, Result};

/// The linear SEM induced on a node subset by marginalising out the rest.
///
/// Each kept node `j` is regressed on its kept ancestors; the removed
/// ancestors `U_j = An(j) \ S` are integrated out through the precision of
/// the ancestral marginal over `An(j) ∪ {j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedSem {
    subset: Vec<usize>,
    weights: DMatrix<f64>,
    noise_var: Vec<f64>,
}

impl RestrictedSem {
    /// Kept nodes, ascending. Local index `a` refers to `subset()[a]`.
    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    /// Local weight matrix.
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Local noise variances.
    pub fn noise_var(&self) -> &[f64] {
        &self.noise_var
    }

    pub fn local_index(&self, node: usize) -> Option<usize> {
        self.subset.binary_search(&node).ok()
    }

    /// Restricted weight of `from -> to`, addressed by global labels.
    pub fn weight(&self, from: usize, to: usize) -> f64 {
        match (self.local_index(from), self.local_index(to)) {
            (Some(a), Some(b)) => self.weights[(a, b)],
            _ => 0.0,
        }
    }

    /// Restricted noise variance of `node` (global label).
    pub fn noise_var_of(&self, node: usize) -> Option<f64> {
        self.local_index(node).map(|a| self.noise_var[a])
    }

    /// `(I - B_S) Ω_S⁻¹ (I - B_S)ᵀ`.
    pub fn precision(&self) -> DMatrix<f64> {
        let k = self.subset.len();
        let i_minus_b = DMatrix::<f64>::identity(k, k) - &self.weights;
        let inv = DMatrix::from_diagonal(&DVector::from_iterator(
            k,
            self.noise_var.iter().map(|v| 1.0 / v),
        ));
        crate::linalg::symmetrize(&(&i_minus_b * inv * i_minus_b.transpose()))
    }
}

impl LinearSem {
    /// Parameters of the SEM restricted to `subset`.
    pub fn restricted(&self, subset: &NodeSet) -> Result<RestrictedSem> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let p = self.p();
        if let Some(&index) = subset.iter().find(|&&v| v >= p) {
            return Err(Error::IndexOutOfRange { index, p });
        }
        let nodes: Vec<usize> = subset.iter().copied().collect();
        let k = nodes.len();
        let mut weights = DMatrix::zeros(k, k);
        let mut noise_var = vec![0.0; k];
        let b = self.weights();

        for (jl, &j) in nodes.iter().enumerate() {
            let sigma2 = self.noise_var()[j];
            let anc = self.dag().ancestors(j);
            let removed: Vec<usize> = anc.iter().copied().filter(|u| !subset.contains(u)).collect();
            if removed.is_empty() {
                noise_var[jl] = sigma2;
                for (kl, &kk) in nodes.iter().enumerate() {
                    weights[(kl, jl)] = b[(kk, j)];
                }
                continue;
            }

            // Precision of the ancestral marginal over An(j) ∪ {j}.
            let mut family: Vec<usize> = anc.iter().copied().collect();
            family.push(j);
            family.sort_unstable();
            let theta = ancestral_precision(self, &family);
            let pos = |v: usize| family.binary_search(&v).expect("node in family");
            let u_idx: Vec<usize> = removed.iter().map(|&u| pos(u)).collect();

            let phi = principal_submatrix(&theta, &u_idx);
            let phi_inv = spd_inverse(&phi, &removed)?;
            let b_u = DVector::from_iterator(removed.len(), removed.iter().map(|&u| b[(u, j)]));
            let x = &phi_inv * &b_u;
            let quad = b_u.dot(&x);
            let denom = sigma2 - quad;
            if denom.is_nan() || denom <= 0.0 {
                return Err(Error::SingularSubmatrix(removed));
            }
            let restricted_var = sigma2 * sigma2 / denom;
            noise_var[jl] = restricted_var;

            for (kl, &kk) in nodes.iter().enumerate() {
                if !anc.contains(&kk) {
                    continue;
                }
                let kp = pos(kk);
                let coupling: f64 = u_idx
                    .iter()
                    .zip(x.iter())
                    .map(|(&ui, &xi)| xi * theta[(ui, kp)])
                    .sum();
                weights[(kl, jl)] = restricted_var / sigma2 * (b[(kk, j)] - coupling);
            }
        }
        Ok(RestrictedSem {
            subset: nodes,
            weights,
            noise_var,
        })
    }
}

/// Precision of `X_family` where `family` is closed under ancestors, so the
/// marginal is the sub-SEM on those nodes.
fn ancestral_precision(sem: &LinearSem, family: &[usize]) -> DMatrix<f64> {
    let m = family.len();
    let b = principal_submatrix(sem.weights(), family);
    let i_minus_b = DMatrix::<f64>::identity(m, m) - b;
    let inv = DMatrix::from_diagonal(&DVector::from_iterator(
        m,
        family.iter().map(|&v| 1.0 / sem.noise_var()[v]),
    ));
    &i_minus_b * inv * i_minus_b.transpose()
}
