//! Expected averaging matrix of a gossip process, its spectrum, and the
//! selection matrix that minimizes the second eigenvalue.
//!
//! In each gossip round a node `i` is picked uniformly and contacts a
//! neighbor `j` with probability `Q_ij`. The selected pair averages its
//! estimates, which acts on the estimate vector as the pairwise matrix
//! `A_ij`. The expected one-round map is `A = (1/m) sum_ij Q_ij A_ij`; its
//! second eigenvalue governs convergence speed and the gossip bounds.

mod jacobi;
mod optimize;

pub use jacobi::{eigen_symmetric, EigenDecomposition};
pub use optimize::{optimize_q, StepSchedule};

use rand::Rng;

use crate::matrix::SquareMatrix;
use crate::rng::{self, SimRng};
use crate::topology::Topology;
use crate::{Error, Result};

/// Tolerance on selection-matrix row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Row-stochastic edge-selection matrix: `q[i][j]` is the probability that
/// node `i` contacts `j`, zero off the topology's edges and on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMatrix {
    q: SquareMatrix,
}

impl SelectionMatrix {
    /// Validates and wraps a matrix for the given topology.
    pub fn new(q: SquareMatrix, t: &Topology) -> Result<Self> {
        let m = t.m();
        if q.n() != m {
            return Err(Error::InvalidSelectionMatrix(format!(
                "matrix is {}x{} but topology has {} nodes",
                q.n(),
                q.n(),
                m
            )));
        }
        for i in 0..m {
            let mut sum = 0.0;
            for j in 0..m {
                let v = q.get(i, j);
                if v < 0.0 {
                    return Err(Error::InvalidSelectionMatrix(format!(
                        "negative entry q[{i}][{j}] = {v}"
                    )));
                }
                if v != 0.0 && (i == j || !t.contains_edge(i, j)) {
                    return Err(Error::InvalidSelectionMatrix(format!(
                        "support violation at q[{i}][{j}] = {v}"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidSelectionMatrix(format!(
                    "row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { q })
    }

    /// Each node contacts a uniformly random neighbor.
    pub fn uniform_neighbor(t: &Topology) -> Result<Self> {
        if !t.is_connected() {
            return Err(Error::Disconnected);
        }
        let m = t.m();
        let mut q = SquareMatrix::zeros(m);
        for i in 0..m {
            let deg = t.degree(i);
            for &j in t.neighbors(i) {
                q.set(i, j, 1.0 / deg as f64);
            }
        }
        Self::new(q, t)
    }

    pub fn m(&self) -> usize {
        self.q.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q.get(i, j)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.q
    }

    /// Samples the neighbor node `i` contacts.
    pub fn sample_neighbor(&self, i: usize, rng: &mut SimRng) -> Result<usize> {
        let m = self.m();
        if i >= m {
            return Err(Error::NodeOutOfRange { node: i, m });
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = None;
        for j in 0..m {
            let p = self.q.get(i, j);
            if p > 0.0 {
                acc += p;
                last = Some(j);
                if u < acc {
                    return Ok(j);
                }
            }
        }
        // Row sums to 1 within tolerance; u landed in the rounding slack.
        last.ok_or(Error::ZeroRow(i))
    }

    /// CSV: m rows of m comma-separated entries, full round-trip precision.
    pub fn to_csv(&self) -> String {
        let m = self.m();
        let mut out = String::new();
        for i in 0..m {
            let row: Vec<String> = (0..m).map(|j| format!("{}", self.q.get(i, j))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, t: &Topology) -> Result<Self> {
        let m = t.m();
        let mut q = SquareMatrix::zeros(m);
        let mut rows = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if rows >= m {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {m} rows"),
                });
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != m {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {m} columns, got {}", cells.len()),
                });
            }
            for (j, cell) in cells.iter().enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad entry {cell:?}"),
                })?;
                q.set(rows, j, v);
            }
            rows += 1;
        }
        if rows != m {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {m} rows, got {rows}"),
            });
        }
        Self::new(q, t)
    }
}

/// Spectrum of the expected averaging matrix.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    /// The symmetric expected averaging matrix `A`.
    pub a: SquareMatrix,
    /// Eigenvalues sorted descending; `values[0] = 1` up to round-off.
    pub eigenvalues: Vec<f64>,
    /// Second largest eigenvalue.
    pub lambda2: f64,
    /// Spectral gap `1 - lambda2`.
    pub gap: f64,
}

/// Pairwise averaging matrix `A_ij`: identity except the `{i, j}` block,
/// where all four entries are 1/2. Symmetric, idempotent projector.
pub fn pairwise_matrix(i: usize, j: usize, m: usize) -> Result<SquareMatrix> {
    if i >= m {
        return Err(Error::NodeOutOfRange { node: i, m });
    }
    if j >= m {
        return Err(Error::NodeOutOfRange { node: j, m });
    }
    if i == j {
        return Err(Error::SelfLoop(i));
    }
    let mut a = SquareMatrix::identity(m);
    a.set(i, i, 0.5);
    a.set(j, j, 0.5);
    a.set(i, j, 0.5);
    a.set(j, i, 0.5);
    Ok(a)
}

/// The expected averaging matrix `A = (1/m) sum_ij Q_ij A_ij` and its
/// spectrum. Symmetric by construction (off-diagonal entries combine
/// `Q_ij + Q_ji`), row sums are 1, and the trace is `m - 1`.
pub fn expected_matrix(t: &Topology, q: &SelectionMatrix) -> Result<SpectralSummary> {
    if !t.is_connected() {
        return Err(Error::Disconnected);
    }
    let m = t.m();
    if q.m() != m {
        return Err(Error::InvalidSelectionMatrix(
            "selection matrix size does not match topology".into(),
        ));
    }
    let mf = m as f64;
    let mut a = SquareMatrix::zeros(m);
    for i in 0..m {
        let mut off_sum = 0.0;
        for j in 0..m {
            if i == j {
                continue;
            }
            let w = (q.get(i, j) + q.get(j, i)) / (2.0 * mf);
            a.set(i, j, w);
            off_sum += w;
        }
        a.set(i, i, 1.0 - off_sum);
    }
    let eig = eigen_symmetric(&a, 1e-9)?;
    let lambda2 = eig.values[1];
    Ok(SpectralSummary {
        a,
        eigenvalues: eig.values,
        lambda2,
        gap: 1.0 - lambda2,
    })
}

/// Second largest eigenvalue of a symmetric matrix (full Jacobi
/// decomposition; input asymmetric beyond 1e-9 is rejected).
pub fn second_eigenvalue(a: &SquareMatrix) -> Result<f64> {
    if a.n() < 2 {
        return Err(Error::InvalidSize {
            what: "second eigenvalue",
            min: 2,
            got: a.n(),
        });
    }
    let eig = eigen_symmetric(a, 1e-9)?;
    Ok(eig.values[1])
}

/// Empirical check of the norm contraction inequalities for the random
/// one-round map: with `J = (1/m) 1 1^T` and `Y` independent of the round,
///
/// (i)  `E ||A(t) Y||^2      <= lambda2 E ||Y - JY||^2 + E ||JY||^2`
/// (ii) `E ||A(t) Y - J Y||^2 <= lambda2 E ||Y - JY||^2`
#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub trials: usize,
    pub lambda2: f64,
    /// Empirical mean and standard error of `||A(t) Y||^2`.
    pub mean_ay_sq: f64,
    pub se_ay_sq: f64,
    /// Empirical mean and standard error of `||A(t) Y - J Y||^2`.
    pub mean_centered_sq: f64,
    pub se_centered_sq: f64,
    /// Empirical `E ||Y - JY||^2` and `E ||JY||^2`.
    pub mean_y_centered_sq: f64,
    pub mean_jy_sq: f64,
    /// Right-hand side of (i) with empirical expectations.
    pub rhs_full: f64,
    /// Right-hand side of (ii) with empirical expectations.
    pub rhs_centered: f64,
}

pub fn contraction_check<F>(
    t: &Topology,
    q: &SelectionMatrix,
    mut y_sampler: F,
    trials: usize,
    seed: u64,
) -> Result<ContractionReport>
where
    F: FnMut(&mut SimRng) -> Vec<f64>,
{
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let summary = expected_matrix(t, q)?;
    let m = t.m();
    let mf = m as f64;
    let mut rng = rng::substream(seed, 0);

    let mut sum_ay = 0.0;
    let mut sumsq_ay = 0.0;
    let mut sum_c = 0.0;
    let mut sumsq_c = 0.0;
    let mut sum_yc = 0.0;
    let mut sum_jy = 0.0;

    for _ in 0..trials {
        let y = y_sampler(&mut rng);
        assert_eq!(y.len(), m, "Y sampler must produce vectors of length m");
        let i = rng.random_range(0..m);
        let j = q.sample_neighbor(i, &mut rng)?;

        let ybar = y.iter().sum::<f64>() / mf;
        let jy_sq = mf * ybar * ybar;
        let yc_sq: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();

        // A_ij applied to y: rows i and j replaced by their mean.
        let pair_mean = 0.5 * (y[i] + y[j]);
        let mut ay_sq = 0.0;
        let mut c_sq = 0.0;
        for (k, &v) in y.iter().enumerate() {
            let w = if k == i || k == j { pair_mean } else { v };
            ay_sq += w * w;
            c_sq += (w - ybar) * (w - ybar);
        }

        sum_ay += ay_sq;
        sumsq_ay += ay_sq * ay_sq;
        sum_c += c_sq;
        sumsq_c += c_sq * c_sq;
        sum_yc += yc_sq;
        sum_jy += jy_sq;
    }

    let n = trials as f64;
    let mean_se = |sum: f64, sumsq: f64| -> (f64, f64) {
        let mean = sum / n;
        let var = (sumsq / n - mean * mean).max(0.0);
        (mean, (var / n).sqrt())
    };
    let (mean_ay_sq, se_ay_sq) = mean_se(sum_ay, sumsq_ay);
    let (mean_centered_sq, se_centered_sq) = mean_se(sum_c, sumsq_c);
    let mean_y_centered_sq = sum_yc / n;
    let mean_jy_sq = sum_jy / n;

    Ok(ContractionReport {
        trials,
        lambda2: summary.lambda2,
        mean_ay_sq,
        se_ay_sq,
        mean_centered_sq,
        se_centered_sq,
        mean_y_centered_sq,
        mean_jy_sq,
        rhs_full: summary.lambda2 * mean_y_centered_sq + mean_jy_sq,
        rhs_centered: summary.lambda2 * mean_y_centered_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn uniform_complete(m: usize) -> (Topology, SelectionMatrix) {
        let t = Topology::complete(m).unwrap();
        let q = SelectionMatrix::uniform_neighbor(&t).unwrap();
        (t, q)
    }

    #[test]
    fn pairwise_matrix_small_cases() {
        let a = pairwise_matrix(0, 1, 2).unwrap();
        for (i, j, v) in [(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)] {
            assert_eq!(a.get(i, j), v);
        }
        let b = pairwise_matrix(0, 1, 3).unwrap();
        assert_eq!(b.row(2), &[0.0, 0.0, 1.0]);
        assert!(pairwise_matrix(0, 0, 3).is_err());
        assert!(pairwise_matrix(0, 5, 3).is_err());
    }

    #[test]
    fn pairwise_matrix_is_idempotent() {
        let mut r = rng::master(5);
        for _ in 0..20 {
            let m = r.random_range(2..12);
            let i = r.random_range(0..m);
            let mut j = r.random_range(0..m);
            if j == i {
                j = (j + 1) % m;
            }
            let a = pairwise_matrix(i, j, m).unwrap();
            for p in 0..m {
                for s in 0..m {
                    let sq: f64 = (0..m).map(|k| a.get(p, k) * a.get(k, s)).sum();
                    assert!((sq - a.get(p, s)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn complete_graph_lambda2_matches_closed_form() {
        for m in [3usize, 10, 50] {
            let (t, q) = uniform_complete(m);
            let s = expected_matrix(&t, &q).unwrap();
            let expect = 1.0 - 1.0 / (m as f64 - 1.0);
            assert!(
                (s.lambda2 - expect).abs() < 1e-9,
                "m={m}: {} vs {expect}",
                s.lambda2
            );
        }
    }

    #[test]
    fn star_graph_lambda2_matches_closed_form() {
        for m in [3usize, 10, 25] {
            let t = Topology::star(m).unwrap();
            let q = SelectionMatrix::uniform_neighbor(&t).unwrap();
            let s = expected_matrix(&t, &q).unwrap();
            let expect = 1.0 - 1.0 / (2.0 * (m as f64 - 1.0));
            assert!((s.lambda2 - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_row_sums_and_eigenvalue_range() {
        let mut r = rng::master(17);
        for _ in 0..30 {
            let m = r.random_range(3..20);
            let t = Topology::random_connected(m, r.random_range(0..8), &mut r).unwrap();
            // Random feasible Q: positive weights on edges, rows normalized.
            let mut q = SquareMatrix::zeros(m);
            for i in 0..m {
                let mut sum = 0.0;
                let weights: Vec<(usize, f64)> = t
                    .neighbors(i)
                    .iter()
                    .map(|&j| (j, r.random_range(0.1..1.0)))
                    .collect();
                for &(_, w) in &weights {
                    sum += w;
                }
                for (j, w) in weights {
                    q.set(i, j, w / sum);
                }
            }
            let q = SelectionMatrix::new(q, &t).unwrap();
            let s = expected_matrix(&t, &q).unwrap();

            assert!((s.a.trace() - (m as f64 - 1.0)).abs() < 1e-9);
            for i in 0..m {
                let row_sum: f64 = s.a.row(i).iter().sum();
                assert!((row_sum - 1.0).abs() < 1e-9);
            }
            assert!((s.eigenvalues[0] - 1.0).abs() < 1e-9);
            for &l in &s.eigenvalues {
                assert!((-1e-9..=1.0 + 1e-9).contains(&l));
            }
            assert_eq!(s.a.asymmetry(), 0.0);
        }
    }

    #[test]
    fn second_eigenvalue_special_matrices() {
        let id = SquareMatrix::identity(3);
        assert!((second_eigenvalue(&id).unwrap() - 1.0).abs() < 1e-12);

        let m = 4;
        let mut j = SquareMatrix::zeros(m);
        for a in 0..m {
            for b in 0..m {
                j.set(a, b, 1.0 / m as f64);
            }
        }
        assert!(second_eigenvalue(&j).unwrap().abs() < 1e-12);

        let (t, q) = uniform_complete(50);
        let s = expected_matrix(&t, &q).unwrap();
        assert!((second_eigenvalue(&s.a).unwrap() - (1.0 - 1.0 / 49.0)).abs() < 1e-9);

        let mut asym = SquareMatrix::zeros(2);
        asym.set(0, 1, 1.0);
        assert!(second_eigenvalue(&asym).is_err());
    }

    #[test]
    fn selection_matrix_validation() {
        let t = Topology::star(3).unwrap();
        // Entry off the edge set.
        let mut q = SquareMatrix::zeros(3);
        q.set(0, 1, 0.5);
        q.set(0, 2, 0.5);
        q.set(1, 2, 1.0);
        q.set(2, 0, 1.0);
        assert!(SelectionMatrix::new(q, &t).is_err());
        // Bad row sum.
        let mut q = SquareMatrix::zeros(3);
        q.set(0, 1, 0.3);
        q.set(1, 0, 1.0);
        q.set(2, 0, 1.0);
        assert!(SelectionMatrix::new(q, &t).is_err());
        // Uniform neighbor is valid.
        assert!(SelectionMatrix::uniform_neighbor(&t).is_ok());
    }

    #[test]
    fn selection_matrix_csv_round_trip() {
        let t = Topology::ring(5).unwrap();
        let q = SelectionMatrix::uniform_neighbor(&t).unwrap();
        let text = q.to_csv();
        let back = SelectionMatrix::from_csv(&text, &t).unwrap();
        assert_eq!(q, back);
        assert!(SelectionMatrix::from_csv("1,0\n", &t).is_err());
    }

    #[test]
    fn contraction_all_ones_vector() {
        let (t, q) = uniform_complete(4);
        let rep = contraction_check(&t, &q, |_| vec![1.0; 4], 100, 9).unwrap();
        assert_eq!(rep.mean_centered_sq, 0.0);
        // (i) holds with equality: A(t) preserves the all-ones direction.
        assert!((rep.mean_ay_sq - rep.mean_jy_sq).abs() < 1e-12);
    }

    #[test]
    fn contraction_constant_random_vector() {
        let (t, q) = uniform_complete(5);
        let rep = contraction_check(
            &t,
            &q,
            |r| {
                let c: f64 = r.random_range(-2.0..2.0);
                vec![c; 5]
            },
            1000,
            10,
        )
        .unwrap();
        assert!(rep.mean_centered_sq < 1e-24);
        assert!((rep.mean_ay_sq - rep.mean_jy_sq).abs() < 1e-12 * rep.mean_jy_sq.max(1.0));
    }

    #[test]
    fn contraction_gaussian_vectors() {
        let (t, q) = uniform_complete(5);
        let rep = contraction_check(
            &t,
            &q,
            |r| (0..5).map(|_| r.sample::<f64, _>(StandardNormal)).collect(),
            100_000,
            11,
        )
        .unwrap();
        let rel_se = rep.se_centered_sq / rep.mean_centered_sq;
        assert!(
            rep.mean_centered_sq <= rep.rhs_centered * (1.0 + 3.0 * rel_se),
            "(ii) violated: {} vs {}",
            rep.mean_centered_sq,
            rep.rhs_centered
        );
        let rel_se_full = rep.se_ay_sq / rep.mean_ay_sq;
        assert!(rep.mean_ay_sq <= rep.rhs_full * (1.0 + 3.0 * rel_se_full));
    }
}
