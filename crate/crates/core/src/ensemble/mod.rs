//! Exact second-moment propagation of all node estimates under the
//! weighted-sum update.
//!
//! After round `t` node `i` holds `S_i(t) = sum_j gamma_ij(t) X_j + V_i(t)`
//! where the `X_j` are the unit-power sources and `V_i(t)` collects the
//! description noises injected so far. An exchange on edge `{i, j}` with
//! normalized local distortion `d` maps
//!
//! ```text
//! S_i' = S_i/2 + S_j/2 + Z_j/2,   Var(Z_j) = E(S_j^2) d / (1 - d)
//! S_j' = S_i/2 + S_j/2 + Z_i/2,   Var(Z_i) = E(S_i^2) d / (1 - d)
//! ```
//!
//! with fresh independent Gaussian `Z`'s. Everything in scope is jointly
//! Gaussian and linear, so the pair `(Gamma, Sigma_V)` determines every
//! moment exactly; no distributions are ever materialized. `d = 0` is the
//! exact-gossip degenerate mode (no noise, unbounded description rate).
//!
//! A node that never appears in a selected edge reports the zero-round
//! estimate `X_i / m`, whose distortion is `(m-1)/m^2` exactly.

pub mod monte_carlo;

pub use monte_carlo::{monte_carlo_run, MonteCarloOptions, MonteCarloResult, SourceKind};

use serde::{Deserialize, Serialize};

use crate::matrix::{dot, SquareMatrix};
use crate::{Error, Result};

/// Exact joint description of all node estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    m: usize,
    /// Row `i` holds the source coefficients of `S_i(t)`; rows are convex
    /// combinations (nonnegative, summing to 1).
    gamma: SquareMatrix,
    /// Covariance of the noise terms `V_i(t)`; symmetric PSD.
    sigma_v: SquareMatrix,
    participated: Vec<bool>,
    /// Rounds a node was selected in, for the diagonal-coefficient bound
    /// `gamma_ii >= 2^-tau_i`.
    selection_counts: Vec<u32>,
    round: usize,
}

/// Serialized form: matrices as row-major arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub m: usize,
    pub round: usize,
    pub gamma: Vec<f64>,
    pub sigma_v: Vec<f64>,
    pub participated: Vec<bool>,
    pub selection_counts: Vec<u32>,
}

/// Fresh state at round 0: `S_i(0) = X_i`.
pub fn init_state(m: usize) -> Result<EnsembleState> {
    if m < 2 {
        return Err(Error::InvalidSize {
            what: "ensemble",
            min: 2,
            got: m,
        });
    }
    Ok(EnsembleState {
        m,
        gamma: SquareMatrix::identity(m),
        sigma_v: SquareMatrix::zeros(m),
        participated: vec![false; m],
        selection_counts: vec![0; m],
        round: 0,
    })
}

impl EnsembleState {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn participated(&self, i: usize) -> bool {
        self.participated[i]
    }

    pub fn selection_count(&self, i: usize) -> u32 {
        self.selection_counts[i]
    }

    pub fn gamma(&self) -> &SquareMatrix {
        &self.gamma
    }

    pub fn sigma_v(&self) -> &SquareMatrix {
        &self.sigma_v
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.m {
            return Err(Error::NodeOutOfRange { node: i, m: self.m });
        }
        Ok(())
    }

    /// One weighted-sum exchange on edge `{i, j}`. `d` must lie in `[0, 1)`;
    /// `d = 0` runs the exact-gossip limit.
    pub fn apply_exchange(&mut self, i: usize, j: usize, d: f64) -> Result<()> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        if !(0.0..1.0).contains(&d) {
            return Err(Error::InvalidDistortion {
                range: "[0, 1)",
                got: d,
            });
        }

        let noise_scale = d / (1.0 - d);
        let var_z_i = self.second_moment(i) * noise_scale;
        let var_z_j = self.second_moment(j) * noise_scale;

        // Coefficients: both rows become the average of the old rows.
        let m = self.m;
        let mut merged = vec![0.0; m];
        for k in 0..m {
            merged[k] = 0.5 * (self.gamma.get(i, k) + self.gamma.get(j, k));
        }
        self.gamma.row_mut(i).copy_from_slice(&merged);
        self.gamma.row_mut(j).copy_from_slice(&merged);

        // Noise covariance: exact bilinear update. Old rows are snapshotted
        // first because the new rows i and j both depend on them.
        let old_i: Vec<f64> = self.sigma_v.row(i).to_vec();
        let old_j: Vec<f64> = self.sigma_v.row(j).to_vec();
        let v_ii = old_i[i];
        let v_jj = old_j[j];
        let v_ij = old_i[j];

        for k in 0..m {
            if k == i || k == j {
                continue;
            }
            let c = 0.5 * (old_i[k] + old_j[k]);
            self.sigma_v.set(i, k, c);
            self.sigma_v.set(k, i, c);
            self.sigma_v.set(j, k, c);
            self.sigma_v.set(k, j, c);
        }
        let base = 0.25 * (v_ii + v_jj + 2.0 * v_ij);
        self.sigma_v.set(i, i, base + 0.25 * var_z_j);
        self.sigma_v.set(j, j, base + 0.25 * var_z_i);
        self.sigma_v.set(i, j, base);
        self.sigma_v.set(j, i, base);

        self.participated[i] = true;
        self.participated[j] = true;
        self.selection_counts[i] += 1;
        self.selection_counts[j] += 1;
        self.round += 1;
        Ok(())
    }

    /// `E(S_i(t)^2)`.
    pub fn second_moment(&self, i: usize) -> f64 {
        let g = self.gamma.row(i);
        dot(g, g) + self.sigma_v.get(i, i)
    }

    /// `E(S_i(t) S_j(t))`.
    pub fn cross_moment(&self, i: usize, j: usize) -> f64 {
        dot(self.gamma.row(i), self.gamma.row(j)) + self.sigma_v.get(i, j)
    }

    /// Mean squared error of node `i`'s final estimate against the true
    /// average. Nodes that never participated use the `X_i / m` estimate.
    pub fn node_distortion(&self, i: usize) -> f64 {
        let m = self.m as f64;
        if !self.participated[i] {
            return (m - 1.0) / (m * m);
        }
        let target = 1.0 / m;
        let g = self.gamma.row(i);
        let coeff: f64 = g.iter().map(|&v| (v - target) * (v - target)).sum();
        coeff + self.sigma_v.get(i, i)
    }

    /// Mean of the per-node distortions. When all nodes report the same
    /// value the mean is that value exactly, without summation round-off;
    /// the zero-round anchor `(m-1)/m^2` relies on this.
    pub fn average_distortion(&self) -> f64 {
        let first = self.node_distortion(0);
        let mut sum = first;
        let mut all_equal = true;
        for i in 1..self.m {
            let v = self.node_distortion(i);
            all_equal &= v == first;
            sum += v;
        }
        if all_equal {
            first
        } else {
            sum / self.m as f64
        }
    }

    /// Squared correlation coefficient `E(S_i S_j)^2 / (E S_i^2 E S_j^2)`,
    /// the quantity that discounts the Wyner-Ziv rate.
    pub fn wz_correlation(&self, i: usize, j: usize) -> Result<f64> {
        self.check_node(i)?;
        self.check_node(j)?;
        let si = self.second_moment(i);
        let sj = self.second_moment(j);
        if si <= 0.0 {
            return Err(Error::ZeroSecondMoment(i));
        }
        if sj <= 0.0 {
            return Err(Error::ZeroSecondMoment(j));
        }
        let c = self.cross_moment(i, j);
        Ok((c * c / (si * sj)).min(1.0))
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            m: self.m,
            round: self.round,
            gamma: self.gamma.as_slice().to_vec(),
            sigma_v: self.sigma_v.as_slice().to_vec(),
            participated: self.participated.clone(),
            selection_counts: self.selection_counts.clone(),
        }
    }

    pub fn from_snapshot(s: StateSnapshot) -> Result<Self> {
        let m = s.m;
        if m < 2 {
            return Err(Error::InvalidSize {
                what: "ensemble",
                min: 2,
                got: m,
            });
        }
        if s.participated.len() != m || s.selection_counts.len() != m {
            return Err(Error::InvalidParameter(
                "snapshot vector lengths do not match m".into(),
            ));
        }
        Ok(EnsembleState {
            m,
            gamma: SquareMatrix::from_rows(m, s.gamma)?,
            sigma_v: SquareMatrix::from_rows(m, s.sigma_v)?,
            participated: s.participated,
            selection_counts: s.selection_counts,
            round: s.round,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::spectral::eigen_symmetric;
    use crate::topology::Topology;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_sequence(
        t: &Topology,
        len: usize,
        rng: &mut rng::SimRng,
    ) -> Vec<(usize, usize)> {
        let edges: Vec<_> = t.edges().collect();
        (0..len)
            .map(|_| edges[rng.random_range(0..edges.len())])
            .collect()
    }

    #[test]
    fn init_state_moments() {
        let s = init_state(3).unwrap();
        for i in 0..3 {
            assert_eq!(s.gamma().get(i, i), 1.0);
            assert_eq!(s.second_moment(i), 1.0);
            for j in 0..3 {
                if i != j {
                    assert_eq!(s.cross_moment(i, j), 0.0);
                }
            }
        }
        assert!(init_state(1).is_err());
    }

    #[test]
    fn zero_rounds_distortion_is_zero_rate_anchor() {
        for m in [2usize, 3, 5, 10, 50] {
            let s = init_state(m).unwrap();
            let mf = m as f64;
            let expect = (mf - 1.0) / (mf * mf);
            assert_eq!(s.average_distortion(), expect);
            assert_eq!(s.node_distortion(0), expect);
        }
    }

    #[test]
    fn two_node_single_exchange_hand_expansion() {
        let d = 0.25;
        let mut s = init_state(2).unwrap();
        s.apply_exchange(0, 1, d).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(s.gamma().get(i, j), 0.5);
            }
        }
        let noise = d / (4.0 * (1.0 - d));
        assert!((s.sigma_v().get(0, 0) - noise).abs() < 1e-15);
        assert!((s.sigma_v().get(1, 1) - noise).abs() < 1e-15);
        assert_eq!(s.sigma_v().get(0, 1), 0.0);
        assert!((s.node_distortion(0) - noise).abs() < 1e-15);
        assert!((s.node_distortion(1) - noise).abs() < 1e-15);
    }

    #[test]
    fn exact_gossip_mode_keeps_noise_zero() {
        let t = Topology::complete(4).unwrap();
        let mut s = init_state(4).unwrap();
        let mut r = rng::master(2);
        for e in random_sequence(&t, 30, &mut r) {
            s.apply_exchange(e.0, e.1, 0.0).unwrap();
        }
        assert_eq!(s.sigma_v().frobenius_norm(), 0.0);

        let mut two = init_state(2).unwrap();
        two.apply_exchange(0, 1, 0.0).unwrap();
        assert_eq!(two.node_distortion(0), 0.0);
        assert_eq!(two.node_distortion(1), 0.0);
    }

    #[test]
    fn exchange_argument_validation() {
        let mut s = init_state(3).unwrap();
        assert!(s.apply_exchange(0, 0, 0.1).is_err());
        assert!(s.apply_exchange(0, 3, 0.1).is_err());
        assert!(s.apply_exchange(0, 1, 1.0).is_err());
        assert!(s.apply_exchange(0, 1, -0.1).is_err());
    }

    #[test]
    fn wz_correlation_cases() {
        let fresh = init_state(4).unwrap();
        assert_eq!(fresh.wz_correlation(0, 1).unwrap(), 0.0);

        // d -> 0: both nodes hold the same value, correlation 1.
        let mut s = init_state(2).unwrap();
        s.apply_exchange(0, 1, 0.0).unwrap();
        assert_eq!(s.wz_correlation(0, 1).unwrap(), 1.0);

        let t = Topology::complete(10).unwrap();
        let mut s = init_state(10).unwrap();
        let mut r = rng::master(7);
        for e in random_sequence(&t, 50, &mut r) {
            s.apply_exchange(e.0, e.1, 0.1).unwrap();
        }
        let rho2 = s.wz_correlation(0, 1).unwrap();
        assert!(rho2 > 0.0 && rho2 < 1.0);
    }

    #[test]
    fn diagonal_coefficient_bound_holds_exactly() {
        let mut master = rng::master(13);
        for _ in 0..200 {
            let m = master.random_range(2..=10);
            let t = Topology::complete(m).unwrap();
            let len = master.random_range(0..=60);
            let d = master.random_range(0.0..0.9);
            let mut s = init_state(m).unwrap();
            for e in random_sequence(&t, len, &mut master) {
                s.apply_exchange(e.0, e.1, d).unwrap();
            }
            for i in 0..m {
                let floor = 0.5f64.powi(s.selection_count(i) as i32);
                assert!(
                    s.gamma().get(i, i) >= floor,
                    "gamma_ii {} < 2^-tau {}",
                    s.gamma().get(i, i),
                    floor
                );
            }
        }
    }

    #[test]
    fn sigma_v_stays_symmetric_psd() {
        let t = Topology::complete(6).unwrap();
        let mut s = init_state(6).unwrap();
        let mut r = rng::master(19);
        for e in random_sequence(&t, 1000, &mut r) {
            let d = r.random_range(0.0..0.8);
            s.apply_exchange(e.0, e.1, d).unwrap();
        }
        assert_eq!(s.sigma_v().asymmetry(), 0.0);
        let eig = eigen_symmetric(s.sigma_v(), 0.0).unwrap();
        assert!(*eig.values.last().unwrap() >= -1e-9);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut s = init_state(4).unwrap();
        s.apply_exchange(0, 2, 0.3).unwrap();
        s.apply_exchange(1, 2, 0.1).unwrap();
        let json = serde_json::to_string(&s.snapshot()).unwrap();
        let back: StateSnapshot = serde_json::from_str(&json).unwrap();
        let restored = EnsembleState::from_snapshot(back).unwrap();
        assert_eq!(s, restored);
    }

    proptest! {
        #[test]
        fn gamma_rows_remain_convex_combinations(
            seed in any::<u64>(),
            m in 2usize..8,
            len in 0usize..40,
            d in 0.0f64..0.9,
        ) {
            let t = Topology::complete(m).unwrap();
            let mut r = rng::substream(seed, 8);
            let mut s = init_state(m).unwrap();
            for e in random_sequence(&t, len, &mut r) {
                s.apply_exchange(e.0, e.1, d).unwrap();
            }
            for i in 0..m {
                let row = s.gamma().row(i);
                let sum: f64 = row.iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12);
                for &v in row {
                    prop_assert!(v >= 0.0);
                }
            }
        }
    }
}
