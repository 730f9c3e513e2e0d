//! Small dense linear-algebra helpers shared by the model and solver code.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Principal submatrix `m[idx, idx]`, keeping the order of `idx`.
pub fn principal_submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Block `m[rows, cols]`.
pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

/// Inverse of a symmetric positive-definite matrix. Falls back to LU when
/// Cholesky fails on a nearly indefinite input. `labels` only feeds the error.
pub fn spd_inverse(m: &DMatrix<f64>, labels: &[usize]) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let inv = match m.clone().cholesky() {
        Some(chol) => chol.inverse(),
        None => m
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularSubmatrix(labels.to_vec()))?,
    };
    if inv.iter().all(|v| v.is_finite()) {
        Ok(symmetrize(&inv))
    } else {
        Err(Error::SingularSubmatrix(labels.to_vec()))
    }
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |r, c| 0.5 * (m[(r, c)] + m[(c, r)]))
}

/// Largest absolute entry (elementwise sup-norm).
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Largest absolute row sum (induced infinity norm).
pub fn max_row_sum(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|r| (0..r).all(|c| (m[(r, c)] - m[(c, r)]).abs() <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_chain_covariance() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
        let theta = spd_inverse(&sigma, &[0, 1]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 1.0]);
        assert!(max_abs(&(theta - expected)) < 1e-12);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            spd_inverse(&m, &[3, 4]),
            Err(Error::SingularSubmatrix(v)) if v == vec![3, 4]
        ));
    }

    #[test]
    fn norms() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, 0.5, 0.5]);
        assert_eq!(max_abs(&m), 3.0);
        assert_eq!(max_row_sum(&m), 4.0);
    }
}
