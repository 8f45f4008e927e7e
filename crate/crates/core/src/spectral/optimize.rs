//! Projected subgradient minimization of the second eigenvalue of the
//! expected averaging matrix over feasible selection matrices.
//!
//! Since every feasible `A` fixes the all-ones eigenvector with eigenvalue
//! 1, `lambda2(A(Q))` is the largest eigenvalue on the complement subspace
//! and is convex in `Q`. A subgradient at `Q` comes from the outer product
//! of the `lambda2` eigenvector `v` contracted with `dA/dQ_ij = (1/m) A_ij`,
//! i.e. `g_ij = (1/m)(1 - (v_i - v_j)^2 / 2)`. Steps are projected back by
//! clipping negatives, zeroing non-edges, and renormalizing rows. The best
//! feasible iterate is returned, so the result is never worse than the
//! uniform-neighbor warm start.

use crate::matrix::SquareMatrix;
use crate::topology::Topology;
use crate::{Error, Result};

use super::{eigen_symmetric, expected_matrix, SelectionMatrix};

/// Diminishing step sizes `scale / sqrt(k)`, `k = 1, 2, ...`.
#[derive(Debug, Clone, Copy)]
pub struct StepSchedule {
    pub scale: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self { scale: 0.5 }
    }
}

impl StepSchedule {
    fn step(&self, k: usize) -> f64 {
        self.scale / (k as f64).sqrt()
    }
}

/// Minimizes `lambda2` over selection matrices for `t`. Deterministic given
/// `(t, iterations, schedule)`; when `lambda2` is nearly degenerate with
/// `lambda3` the subgradient uses the first eigenvector in the solver's
/// deterministic descending order.
pub fn optimize_q(
    t: &Topology,
    iterations: usize,
    schedule: StepSchedule,
) -> Result<SelectionMatrix> {
    if iterations == 0 {
        return Err(Error::EmptyBudget);
    }
    if !t.is_connected() {
        return Err(Error::Disconnected);
    }
    let m = t.m();
    let mf = m as f64;

    let mut q = SelectionMatrix::uniform_neighbor(t)?;
    let mut best = q.clone();
    let mut best_l2 = expected_matrix(t, &q)?.lambda2;

    for k in 1..=iterations {
        let summary = expected_matrix(t, &q)?;
        let eig = eigen_symmetric(&summary.a, 1e-9)?;
        let v = &eig.vectors[1];

        let step = schedule.step(k);
        let mut raw = SquareMatrix::zeros(m);
        for (i, j) in t.edges() {
            let g = (1.0 - 0.5 * (v[i] - v[j]) * (v[i] - v[j])) / mf;
            raw.set(i, j, (q.get(i, j) - step * g).max(0.0));
            raw.set(j, i, (q.get(j, i) - step * g).max(0.0));
        }
        // Renormalize rows; a fully clipped row falls back to uniform.
        for i in 0..m {
            let sum: f64 = t.neighbors(i).iter().map(|&j| raw.get(i, j)).sum();
            if sum > 0.0 {
                for &j in t.neighbors(i) {
                    raw.set(i, j, raw.get(i, j) / sum);
                }
            } else {
                let deg = t.degree(i) as f64;
                for &j in t.neighbors(i) {
                    raw.set(i, j, 1.0 / deg);
                }
            }
            // Guard the row-sum invariant against accumulated round-off.
            let sum: f64 = t.neighbors(i).iter().map(|&j| raw.get(i, j)).sum();
            for &j in t.neighbors(i) {
                raw.set(i, j, raw.get(i, j) / sum);
            }
        }
        q = SelectionMatrix::new(raw, t)?;

        let l2 = expected_matrix(t, &q)?.lambda2;
        if l2 < best_l2 {
            best_l2 = l2;
            best = q.clone();
        }
    }
    Ok(best)
}
