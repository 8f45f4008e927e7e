//! Minimal dense square matrix used for coefficient, covariance, and
//! averaging matrices. Row-major storage, `f64` entries.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n);
        for i in 0..n {
            a.set(i, i, 1.0);
        }
        a
    }

    /// Builds from a row-major slice; `data.len()` must equal `n * n`.
    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::NotSquare {
                rows: data.len() / n.max(1),
                cols: n,
            });
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute difference between the matrix and its transpose.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `self * v` for a vector of length `n`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn checked_symmetric(&self, tol: f64) -> Result<()> {
        let asym = self.asymmetry();
        if asym > tol {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_access() {
        let mut a = SquareMatrix::identity(3);
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(0, 1), 0.0);
        a.set(0, 1, 2.5);
        assert_eq!(a.get(0, 1), 2.5);
        assert_eq!(a.trace(), 3.0);
    }

    #[test]
    fn asymmetry_detects() {
        let mut a = SquareMatrix::zeros(2);
        a.set(0, 1, 1.0);
        assert!(a.checked_symmetric(1e-9).is_err());
        a.set(1, 0, 1.0);
        assert!(a.checked_symmetric(1e-9).is_ok());
    }

    #[test]
    fn mul_vec_matches_hand_computation() {
        let a = SquareMatrix::from_rows(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0]);
    }
}
