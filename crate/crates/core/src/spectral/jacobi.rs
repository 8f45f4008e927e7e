//! Cyclic Jacobi eigendecomposition for symmetric matrices.
//!
//! Sweeps annihilate off-diagonal entries with plane rotations until the
//! off-diagonal Frobenius norm drops below `1e-12 * ||A||_F` (at most 100
//! sweeps). Robust at the matrix sizes this crate works with (m up to a few
//! hundred); no external solver dependency.

use crate::matrix::SquareMatrix;
use crate::{Error, Result};

const REL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Full symmetric eigendecomposition, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues, largest first. Ties keep the solver's column order, so
    /// the decomposition is deterministic for identical input.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`. Sign is fixed
    /// so the entry of largest magnitude is positive.
    pub vectors: Vec<Vec<f64>>,
    /// Number of sweeps used.
    pub sweeps: usize,
}

/// Diagonalizes a symmetric matrix. Inputs asymmetric beyond `sym_tol` are
/// rejected; the computation itself uses the symmetrized part.
pub fn eigen_symmetric(a: &SquareMatrix, sym_tol: f64) -> Result<EigenDecomposition> {
    a.checked_symmetric(sym_tol)?;
    let n = a.n();
    if n == 0 {
        return Err(Error::NotSquare { rows: 0, cols: 0 });
    }

    // Work on the symmetrized copy so rotations preserve symmetry exactly.
    let mut w = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            w.set(i, j, 0.5 * (a.get(i, j) + a.get(j, i)));
        }
    }
    let norm = w.frobenius_norm();
    let mut v = SquareMatrix::identity(n);

    let off = |w: &SquareMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * w.get(i, j) * w.get(i, j);
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS && off(&w) > REL_TOL * norm && norm > 0.0 {
        sweeps += 1;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = w.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = w.get(p, p);
                let aqq = w.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // Smaller-angle root of t^2 + 2*theta*t - 1 = 0.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let wkp = w.get(k, p);
                    let wkq = w.get(k, q);
                    w.set(k, p, c * wkp - s * wkq);
                    w.set(k, q, s * wkp + c * wkq);
                }
                for k in 0..n {
                    let wpk = w.get(p, k);
                    let wqk = w.get(q, k);
                    w.set(p, k, c * wpk - s * wqk);
                    w.set(q, k, s * wpk + c * wqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps a deterministic column order among (near-)equal
    // eigenvalues.
    order.sort_by(|&i, &j| {
        w.get(j, j)
            .partial_cmp(&w.get(i, i))
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let values: Vec<f64> = order.iter().map(|&k| w.get(k, k)).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| {
            let mut col: Vec<f64> = (0..n).map(|r| v.get(r, k)).collect();
            let lead = col
                .iter()
                .cloned()
                .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                .unwrap_or(0.0);
            if lead < 0.0 {
                for x in &mut col {
                    *x = -*x;
                }
            }
            col
        })
        .collect();

    Ok(EigenDecomposition {
        values,
        vectors,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::dot;
    use crate::rng;
    use rand::Rng;

    fn random_symmetric(n: usize, rng: &mut rng::SimRng) -> SquareMatrix {
        let mut a = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        a
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let mut r = rng::master(42);
        for &n in &[2usize, 3, 5, 10, 37, 100] {
            let a = random_symmetric(n, &mut r);
            let eig = eigen_symmetric(&a, 1e-9).unwrap();

            // ||V L V^T - A||_F <= 1e-8 ||A||_F
            let mut recon_err = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += eig.vectors[k][i] * eig.values[k] * eig.vectors[k][j];
                    }
                    let d = s - a.get(i, j);
                    recon_err += d * d;
                }
            }
            assert!(
                recon_err.sqrt() <= 1e-8 * a.frobenius_norm(),
                "reconstruction error too large for n={n}"
            );

            // ||V^T V - I||_F <= 1e-8
            let mut orth_err = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let g = dot(&eig.vectors[i], &eig.vectors[j]);
                    let d = g - if i == j { 1.0 } else { 0.0 };
                    orth_err += d * d;
                }
            }
            assert!(orth_err.sqrt() <= 1e-8, "orthonormality failed for n={n}");

            // Sorted descending.
            for k in 1..n {
                assert!(eig.values[k - 1] >= eig.values[k] - 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_matrix_is_fixed_point() {
        let mut a = SquareMatrix::zeros(3);
        a.set(0, 0, 3.0);
        a.set(1, 1, -1.0);
        a.set(2, 2, 2.0);
        let eig = eigen_symmetric(&a, 0.0).unwrap();
        assert_eq!(eig.values, vec![3.0, 2.0, -1.0]);
    }

    #[test]
    fn rejects_asymmetric() {
        let mut a = SquareMatrix::zeros(2);
        a.set(0, 1, 1.0);
        a.set(1, 0, 0.5);
        assert!(eigen_symmetric(&a, 1e-9).is_err());
    }
}
