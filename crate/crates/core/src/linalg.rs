//! Small dense row-major matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("matrix entries must be finite".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.concat() })
    }

    /// `1 x 1` matrix.
    pub fn scalar(v: f64) -> Self {
        Self { rows: 1, cols: 1, data: vec![v] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `M x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Mᵀ y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                *o += yi * m;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| self.get(i, j) == if i == j { 1.0 } else { 0.0 })
            })
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Positive semidefiniteness via a pivoted LDLᵀ sweep: negative pivots
    /// below `-tol` or a vanishing pivot with a nonzero column fail.
    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_symmetric(tol) {
            return false;
        }
        let n = self.rows;
        let mut a = self.data.clone();
        for k in 0..n {
            let pivot = a[k * n + k];
            if pivot < -tol {
                return false;
            }
            if pivot <= tol {
                if (k + 1..n).any(|i| a[i * n + k].abs() > tol.sqrt()) {
                    return false;
                }
                continue;
            }
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        true
    }

    /// Least-squares solve of `M x = b` through the normal equations; `None`
    /// when `M` has dependent columns.
    pub fn solve_least_squares(&self, b: &[f64]) -> Option<Vec<f64>> {
        let mtm = {
            let mut g = Self::zeros(self.cols, self.cols);
            for i in 0..self.cols {
                for j in 0..self.cols {
                    let v = (0..self.rows).map(|k| self.get(k, i) * self.get(k, j)).sum();
                    g.set(i, j, v);
                }
            }
            g
        };
        solve_dense(&mtm, &self.tr_mul_vec(b))
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        (0..m.rows).map(|i| m.row(i).to_vec()).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Gaussian elimination with partial pivoting; `None` for singular systems.
pub fn solve_dense(m: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = m.rows;
    assert_eq!(n, m.cols);
    let scale = m.data.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let mut a = m.data.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))?;
        if a[piv * n + k].abs() <= 1e-12 * scale {
            return None;
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            x.swap(k, piv);
        }
        for i in k + 1..n {
            let f = a[i * n + k] / a[k * n + k];
            if f != 0.0 {
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                x[i] -= f * x[k];
            }
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k * n + j] * x[j]).sum();
        x[k] = (x[k] - s) / a[k * n + k];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_detection() {
        assert!(Matrix::identity(3).is_psd(1e-10));
        assert!(Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap().is_psd(1e-10));
        assert!(!Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap().is_psd(1e-10));
        assert!(!Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap().is_psd(1e-10));
        assert!(!Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 1.0]]).unwrap().is_psd(1e-10));
    }

    #[test]
    fn dense_solve() {
        let m = Matrix::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]).unwrap();
        let x = solve_dense(&m, &[4.0, 5.0]).unwrap();
        assert!(max_abs_diff(&x, &[1.0, 2.0]) < 1e-14);
        let sing = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(solve_dense(&sing, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn serde_nested_rows() {
        let m: Matrix = toml::from_str::<std::collections::BTreeMap<String, Matrix>>("m = [[1.0, 2.0], [3.0, 4.0]]")
            .unwrap()
            .remove("m")
            .unwrap();
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0]), vec![4.0, 6.0]);
    }
}
