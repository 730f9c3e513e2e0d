use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dag;
use crate::{Error, Result};

/// Linear SEM `X = BᵀX + ε` with independent Gaussian noise
/// `ε_i ~ N(noise_mean[i], noise_var[i])`.
///
/// `B[(i, j)]` is the weight of the edge `i -> j`. A zero weight on an
/// existing edge is allowed: the edge set is the common "potential" structure
/// shared by an observational model and its intervened counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSem {
    dag: Dag,
    weights: DMatrix<f64>,
    noise_var: Vec<f64>,
    noise_mean: Vec<f64>,
}

impl LinearSem {
    pub fn new(
        dag: Dag,
        weights: DMatrix<f64>,
        noise_var: Vec<f64>,
        noise_mean: Vec<f64>,
    ) -> Result<Self> {
        let p = dag.p();
        if weights.shape() != (p, p) || noise_var.len() != p || noise_mean.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "SEM over {p} nodes needs a {p}x{p} weight matrix and length-{p} noise vectors"
            )));
        }
        for i in 0..p {
            for j in 0..p {
                let w = weights[(i, j)];
                if !w.is_finite() {
                    return Err(Error::NonFiniteInput(format!("weight ({i}, {j})")));
                }
                if w != 0.0 && !dag.has_edge(i, j) {
                    return Err(Error::InvalidModel(format!(
                        "nonzero weight at ({i}, {j}) without an edge"
                    )));
                }
            }
        }
        if let Some(i) = noise_var.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidModel(format!(
                "noise variance of node {i} must be positive, got {}",
                noise_var[i]
            )));
        }
        if noise_mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFiniteInput("noise mean".into()));
        }
        Ok(LinearSem {
            dag,
            weights,
            noise_var,
            noise_mean,
        })
    }

    /// Builds a zero-mean SEM from `(from, to, weight)` triples.
    pub fn from_weighted_edges(
        p: usize,
        edges: &[(usize, usize, f64)],
        noise_var: Vec<f64>,
    ) -> Result<Self> {
        let pairs: Vec<_> = edges.iter().map(|&(i, j, _)| (i, j)).collect();
        let dag = Dag::new(p, &pairs)?;
        let mut weights = DMatrix::zeros(p, p);
        for &(i, j, w) in edges {
            weights[(i, j)] = w;
        }
        Self::new(dag, weights, noise_var, vec![0.0; p])
    }

    /// Every edge weighted `weight`, unit noise variances, zero means.
    pub fn uniform(dag: Dag, weight: f64) -> Self {
        let p = dag.p();
        let mut weights = DMatrix::zeros(p, p);
        for &(i, j) in dag.edges() {
            weights[(i, j)] = weight;
        }
        LinearSem {
            dag,
            weights,
            noise_var: vec![1.0; p],
            noise_mean: vec![0.0; p],
        }
    }

    pub fn p(&self) -> usize {
        self.dag.p()
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.weights[(from, to)]
    }

    pub fn noise_var(&self) -> &[f64] {
        &self.noise_var
    }

    pub fn noise_mean(&self) -> &[f64] {
        &self.noise_mean
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut DMatrix<f64>, &mut Vec<f64>, &mut Vec<f64>) {
        (&mut self.weights, &mut self.noise_var, &mut self.noise_mean)
    }

    /// `(I - Bᵀ)⁻¹`, the map from noise to variables.
    fn mixing(&self) -> DMatrix<f64> {
        let p = self.p();
        // Solve column by column in topological order: X_j = sum_k B_kj X_k + e_j.
        let mut mix = DMatrix::<f64>::zeros(p, p);
        for &j in self.dag.topo_order() {
            mix[(j, j)] = 1.0;
            for &k in self.dag.parents(j) {
                let w = self.weights[(k, j)];
                if w != 0.0 {
                    for col in 0..p {
                        mix[(j, col)] += w * mix[(k, col)];
                    }
                }
            }
        }
        mix
    }

    /// Population covariance `Σ = (I-Bᵀ)⁻¹ Ω (I-B)⁻¹` and precision
    /// `Θ = (I-B) Ω⁻¹ (I-B)ᵀ`.
    pub fn population_covariance(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.covariance(), self.precision())
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let mix = self.mixing();
        let omega = DMatrix::from_diagonal(&DVector::from_column_slice(&self.noise_var));
        crate::linalg::symmetrize(&(&mix * omega * mix.transpose()))
    }

    pub fn precision(&self) -> DMatrix<f64> {
        let p = self.p();
        let i_minus_b = DMatrix::<f64>::identity(p, p) - &self.weights;
        let inv_omega =
            DMatrix::from_diagonal(&DVector::from_iterator(p, self.noise_var.iter().map(|v| 1.0 / v)));
        crate::linalg::symmetrize(&(&i_minus_b * inv_omega * i_minus_b.transpose()))
    }

    /// Mean vector `(I - Bᵀ)⁻¹ μ_ε`.
    pub fn mean(&self) -> DVector<f64> {
        self.mixing() * DVector::from_column_slice(&self.noise_mean)
    }

    /// Uncentered second moments `E[XXᵀ] = Σ + μμᵀ`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        let mu = self.mean();
        crate::linalg::symmetrize(&(self.covariance() + &mu * mu.transpose()))
    }

    /// Precision entry computed from the edge-level closed forms:
    /// off-diagonal `-B_ij/σ_j² - B_ji/σ_i² + Σ_{k ∈ Ch(i)∩Ch(j)} B_ik B_jk/σ_k²`
    /// and diagonal `1/σ_i² + Σ_{k ∈ Ch(i)} B_ik²/σ_k²`.
    pub fn precision_entry(&self, i: usize, j: usize) -> f64 {
        let b = &self.weights;
        let s = &self.noise_var;
        if i == j {
            let children: f64 = self
                .dag
                .children(i)
                .iter()
                .map(|&k| b[(i, k)] * b[(i, k)] / s[k])
                .sum();
            return 1.0 / s[i] + children;
        }
        let shared: f64 = self
            .dag
            .children(i)
            .iter()
            .filter(|&&k| self.dag.has_edge(j, k))
            .map(|&k| b[(i, k)] * b[(j, k)] / s[k])
            .sum();
        -b[(i, j)] / s[j] - b[(j, i)] / s[i] + shared
    }

    /// Draws `n` i.i.d. rows, generating nodes in topological order from a
    /// single ChaCha stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> DMatrix<f64> {
        let p = self.p();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd: Vec<f64> = self.noise_var.iter().map(|v| v.sqrt()).collect();
        let mut data = DMatrix::<f64>::zeros(n, p);
        let mut row = vec![0.0; p];
        for r in 0..n {
            for &j in self.dag.topo_order() {
                let z: f64 = StandardNormal.sample(&mut rng);
                let mut x = self.noise_mean[j] + sd[j] * z;
                for &k in self.dag.parents(j) {
                    x += self.weights[(k, j)] * row[k];
                }
                row[j] = x;
            }
            for j in 0..p {
                data[(r, j)] = row[j];
            }
        }
        data
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn chain(weight: f64) -> LinearSem {
        LinearSem::from_weighted_edges(2, &[(0, 1, weight)], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn empty_graph_is_identity() {
        let sem = LinearSem::uniform(Dag::empty(3), 1.0);
        let (sigma, theta) = sem.population_covariance();
        assert_eq!(sigma, DMatrix::identity(3, 3));
        assert_eq!(theta, DMatrix::identity(3, 3));
    }

    #[test]
    fn chain_covariance_and_precision() {
        let (sigma, theta) = chain(1.0).population_covariance();
        let want_sigma = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
        let want_theta = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 1.0]);
        assert!(max_abs(&(sigma - want_sigma)) < 1e-14);
        assert!(max_abs(&(theta - want_theta)) < 1e-14);
    }

    #[test]
    fn chain_closed_form_diagonal() {
        let sem = chain(1.0);
        assert!((sem.precision_entry(0, 0) - 2.0).abs() < 1e-15);
        assert!((sem.precision_entry(0, 1) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn weight_without_edge_is_rejected() {
        let dag = Dag::new(2, &[]).unwrap();
        let mut w = DMatrix::zeros(2, 2);
        w[(0, 1)] = 0.5;
        assert!(matches!(
            LinearSem::new(dag, w, vec![1.0; 2], vec![0.0; 2]),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn non_positive_variance_is_rejected() {
        assert!(LinearSem::from_weighted_edges(2, &[], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn second_moment_adds_mean_outer_product() {
        let mut sem = chain(0.5);
        sem.parts_mut().2[0] = 2.0;
        let mu = sem.mean();
        assert!((mu[0] - 2.0).abs() < 1e-15 && (mu[1] - 1.0).abs() < 1e-15);
        let m = sem.second_moment();
        assert!((m[(1, 1)] - (1.25 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let sem = chain(0.7);
        assert_eq!(sem.sample(50, 9), sem.sample(50, 9));
        assert_ne!(sem.sample(50, 9), sem.sample(50, 10));
    }

    #[test]
    fn sample_moments_match_population() {
        let n = 100_000;
        let empty = LinearSem::uniform(Dag::empty(3), 1.0);
        let x = empty.sample(n, 1);
        for j in 0..3 {
            let col = x.column(j);
            let mean = col.mean();
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            assert!((var - 1.0).abs() < 0.05, "column {j} variance {var}");
        }

        let x = chain(1.0).sample(n, 2);
        let (m0, m1) = (x.column(0).mean(), x.column(1).mean());
        let cov = x
            .row_iter()
            .map(|r| (r[0] - m0) * (r[1] - m1))
            .sum::<f64>()
            / n as f64;
        assert!((cov - 1.0).abs() < 0.05, "covariance {cov}");
    }
}
