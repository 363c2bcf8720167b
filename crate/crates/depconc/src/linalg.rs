//! Minimal dense matrix support: the matrices here are tiny (coordinate
//! metrics, n-by-n mixing matrices, transport couplings), so a flat row-major
//! buffer and straightforward algorithms are all that is needed.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::DimensionMismatch(0, 0));
        }
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch(row.len(), c));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(data.len(), rows * cols));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let data = self.data.iter().map(|v| v * s).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Inverts a square matrix by Gauss-Jordan elimination with partial pivoting.
/// Returns `None` when a pivot collapses below `1e-14` times the matrix scale.
pub fn gauss_jordan_inverse(m: &Matrix) -> Option<Matrix> {
    assert!(m.is_square(), "inverse of a non-square matrix");
    let n = m.rows();
    let mut a = m.clone();
    let mut inv = Matrix::identity(n);
    let scale = m.max_abs().max(1.0);
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[(r, col)].abs() > a[(pivot, col)].abs() {
                pivot = r;
            }
        }
        if a[(pivot, col)].abs() < 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = tmp;
                let tmp = inv[(col, j)];
                inv[(col, j)] = inv[(pivot, j)];
                inv[(pivot, j)] = tmp;
            }
        }
        let p = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= p;
            inv[(col, j)] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                a[(r, j)] -= factor * a[(col, j)];
                inv[(r, j)] -= factor * inv[(col, j)];
            }
        }
    }
    Some(inv)
}

/// Spectral radius of an entrywise-nonnegative matrix.
///
/// Power iteration runs on `C + I`, whose dominant eigenvalue is exactly
/// `rho(C) + 1` and strictly dominates every other eigenvalue in modulus, so
/// the iteration converges from a positive start even for reducible or
/// periodic `C`. Iterates stop when successive estimates differ by less than
/// `tol`; the result is clamped to the max-row-sum upper bound.
pub fn spectral_radius_nonneg(c: &Matrix, tol: f64, max_iter: usize) -> f64 {
    assert!(c.is_square(), "spectral radius of a non-square matrix");
    let n = c.rows();
    if n == 0 {
        return 0.0;
    }
    let row_sum_bound = c.max_row_sum();
    if row_sum_bound == 0.0 {
        return 0.0;
    }
    let mut v = vec![1.0 / n as f64; n];
    let mut estimate = f64::NAN;
    for _ in 0..max_iter {
        // w = (C + I) v
        let mut w = c.matvec(&v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += *vi;
        }
        let norm: f64 = w.iter().map(|x| x.abs()).sum();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm / v.iter().map(|x| x.abs()).sum::<f64>() - 1.0;
        for wi in w.iter_mut() {
            *wi /= norm;
        }
        v = w;
        if estimate.is_finite() && (next - estimate).abs() < tol {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate.max(0.0).min(row_sum_bound)
}

/// Operator norm (largest singular value) via power iteration on `A^T A`.
pub fn operator_norm(a: &Matrix, tol: f64, max_iter: usize) -> f64 {
    let at = a.transpose();
    let gram = at.matmul(a);
    let lambda = spectral_radius_nonneg_sym(&gram, tol, max_iter);
    lambda.max(0.0).sqrt()
}

// Power iteration for a symmetric PSD matrix (Gram matrices only). Shifted by
// the identity for the same robustness reasons as the nonnegative case.
fn spectral_radius_nonneg_sym(g: &Matrix, tol: f64, max_iter: usize) -> f64 {
    let n = g.rows();
    if n == 0 {
        return 0.0;
    }
    // For a symmetric matrix the largest eigenvalue is bounded by the max
    // absolute row sum; this also snaps rounding artifacts on (near-)zero
    // matrices back to zero.
    let row_sum_bound = g.max_row_sum();
    if row_sum_bound == 0.0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) * 1e-3).collect();
    let norm0: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm0;
    }
    let mut estimate = f64::NAN;
    for _ in 0..max_iter {
        let mut w = g.matvec(&v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += *vi;
        }
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        // Rayleigh quotient of the shifted matrix.
        let next = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0;
        for wi in w.iter_mut() {
            *wi /= norm;
        }
        v = w;
        if estimate.is_finite() && (next - estimate).abs() < tol {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate.max(0.0).min(row_sum_bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_identity() {
        let inv = gauss_jordan_inverse(&Matrix::identity(3)).unwrap();
        assert_eq!(inv, Matrix::identity(3));
    }

    #[test]
    fn inverse_round_trip() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let inv = gauss_jordan_inverse(&m).unwrap();
        let prod = m.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(gauss_jordan_inverse(&m).is_none());
    }

    #[test]
    fn spectral_radius_simple_cases() {
        let z = Matrix::zeros(3, 3);
        assert_eq!(spectral_radius_nonneg(&z, 1e-12, 100_000), 0.0);

        // Nilpotent: radius 0.
        let nil = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(spectral_radius_nonneg(&nil, 1e-12, 100_000) < 1e-5);

        // Symmetric off-diagonal 0.5: radius 0.5.
        let m = Matrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let r = spectral_radius_nonneg(&m, 1e-12, 100_000);
        assert!((r - 0.5).abs() < 1e-9, "r = {r}");

        // Periodic with distinct scales: eigenvalues +-1.
        let p = Matrix::from_rows(&[vec![0.0, 2.0], vec![0.5, 0.0]]).unwrap();
        let r = spectral_radius_nonneg(&p, 1e-12, 100_000);
        assert!((r - 1.0).abs() < 1e-9, "r = {r}");
    }

    #[test]
    fn operator_norm_diagonal() {
        let m = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let n = operator_norm(&m, 1e-14, 100_000);
        assert!((n - 3.0).abs() < 1e-9);
    }
}
