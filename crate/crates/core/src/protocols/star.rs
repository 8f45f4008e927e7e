//! Centralized protocol over a star network.
//!
//! Node 1 acts as the cluster head. Rounds 1..m-1 gather: leaf `i+1`
//! describes its source to the hub at distortion `d`. Rounds m-1..2m-3
//! scatter: the hub describes to leaf `i` the aggregate
//! `U_i = (X_1 + sum_{j != 1, i} Xhat_j) / m` at distortion `d1`, and the
//! leaf adds its own source back in. The gather and scatter updates are not
//! weighted-sum updates, so this runner keeps its own closed-form moment
//! bookkeeping, validated by a dedicated Monte Carlo path.

use crate::ensemble::{MonteCarloOptions, MonteCarloResult};
use crate::matrix::SquareMatrix;
use crate::parallel::map_indexed;
use crate::rng;
use crate::{Error, Result};

use rand::Rng;
use rand_distr::StandardNormal;

use super::{RoundLogEntry, RunResult};

fn check_params(m: usize, d: f64, d1: f64) -> Result<()> {
    if m < 3 {
        return Err(Error::InvalidSize {
            what: "star protocol",
            min: 3,
            got: m,
        });
    }
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::InvalidDistortion {
            range: "(0, 1)",
            got: d,
        });
    }
    if !(d1 > 0.0 && d1 < 1.0) {
        return Err(Error::InvalidDistortion {
            range: "(0, 1)",
            got: d1,
        });
    }
    Ok(())
}

/// Hub distortion `(m-1) d / m^2`.
pub fn star_hub_distortion(m: usize, d: f64) -> f64 {
    let mf = m as f64;
    (mf - 1.0) / (mf * mf) * d
}

/// Leaf distortion `(1/m^2 + (m-2)(1-d)/m^2) d1 + (m-2) d / m^2`.
pub fn star_leaf_distortion(m: usize, d: f64, d1: f64) -> f64 {
    let mf = m as f64;
    let u_power = 1.0 / (mf * mf) + (mf - 2.0) / (mf * mf) * (1.0 - d);
    u_power * d1 + (mf - 2.0) / (mf * mf) * d
}

/// Per-node average rate `((m-1)/(2m)) log2(1/(d d1))`.
pub fn star_avg_rate(m: usize, d: f64, d1: f64) -> f64 {
    let mf = m as f64;
    (mf - 1.0) / (2.0 * mf) * (1.0 / (d * d1)).log2()
}

/// Runs the centralized star protocol (2m - 3 rounds) and reports its
/// closed-form rates and distortions.
pub fn run_star_centralized(m: usize, d: f64, d1: f64) -> Result<RunResult> {
    check_params(m, d, d1)?;
    let mf = m as f64;
    let leaf_rate = 0.5 * (1.0 / d).log2();
    let hub_round_rate = 0.5 * (1.0 / d1).log2();

    let mut per_node_rate = vec![leaf_rate; m];
    per_node_rate[0] = (mf - 1.0) * hub_round_rate;

    let hub_dist = star_hub_distortion(m, d);
    let leaf_dist = star_leaf_distortion(m, d, d1);
    let mut per_node_distortion = vec![leaf_dist; m];
    per_node_distortion[0] = hub_dist;

    let rounds_used = 2 * m - 3;
    let mut round_log = Vec::with_capacity(rounds_used);
    for t in 1..=rounds_used {
        let (partner, rate_hub, rate_leaf) = if t < m - 1 {
            (t + 1, 0.0, leaf_rate)
        } else if t == m - 1 {
            // Two time slots: the last gather and the first scatter.
            (m, hub_round_rate, leaf_rate)
        } else {
            (2 * m - t - 1, hub_round_rate, 0.0)
        };
        round_log.push(RoundLogEntry {
            round: t,
            i: 1,
            j: partner,
            rate_i: Some(rate_hub),
            rate_j: Some(rate_leaf),
            rho2: None,
        });
    }

    let avg_rate = per_node_rate.iter().sum::<f64>() / mf;
    let avg_distortion = per_node_distortion.iter().sum::<f64>() / mf;
    Ok(RunResult {
        rounds_used,
        seed: 0,
        d,
        wz: false,
        rate_unbounded: false,
        per_node_rate,
        avg_rate,
        per_node_distortion,
        avg_distortion,
        round_log,
        monte_carlo: None,
    })
}

/// Sample-path check of the star protocol's closed forms: simulates the
/// actual gather/scatter test channels and reports empirical per-node
/// distortions with standard errors.
pub fn star_monte_carlo(
    m: usize,
    d: f64,
    d1: f64,
    opts: &MonteCarloOptions,
) -> Result<MonteCarloResult> {
    check_params(m, d, d1)?;
    if opts.trials == 0 {
        return Err(Error::NoTrials);
    }
    let mf = m as f64;
    let z_sd = (d / (1.0 - d)).sqrt();
    // Aggregate power E(U_i^2) is a protocol constant; the second-stage
    // noise is scaled by it.
    let u_power = 1.0 / (mf * mf) + (mf - 2.0) / (mf * mf) * (1.0 - d);
    let zt_sd = (u_power * d1 / (1.0 - d1)).sqrt();

    let batches = if opts.batches == 0 {
        opts.trials.min(100)
    } else {
        opts.batches.min(opts.trials)
    };
    let base = opts.trials / batches;
    let rem = opts.trials % batches;

    struct Batch {
        n: usize,
        dist: Vec<f64>,
        avg: f64,
        second: Vec<f64>,
        cross: SquareMatrix,
    }

    let stats = map_indexed(opts.parallelism, batches, |b| {
        let n = base + usize::from(b < rem);
        let mut rng = rng::substream(opts.seed, b as u64);
        let mut dist = vec![0.0f64; m];
        let mut avg = 0.0f64;
        let mut second = vec![0.0f64; m];
        let mut cross = SquareMatrix::zeros(m);
        let mut est = vec![0.0f64; m];
        for _ in 0..n {
            let x: Vec<f64> = (0..m).map(|_| opts.source.sample(&mut rng)).collect();
            let truth = x.iter().sum::<f64>() / mf;
            // Gather: descriptions of each leaf source.
            let xhat: Vec<f64> = (1..m)
                .map(|i| {
                    let z: f64 = rng.sample(StandardNormal);
                    (1.0 - d) * (x[i] + z_sd * z)
                })
                .collect();
            let hub_est = (x[0] + xhat.iter().sum::<f64>()) / mf;
            est[0] = hub_est;
            // Scatter: describe U_i = hub aggregate without leaf i's own
            // description; the leaf adds X_i / m back.
            for i in 1..m {
                let u = hub_est - xhat[i - 1] / mf;
                let z: f64 = rng.sample(StandardNormal);
                let uhat = (1.0 - d1) * (u + zt_sd * z);
                est[i] = x[i] / mf + uhat;
            }
            let mut trial_avg = 0.0;
            for i in 0..m {
                let e = truth - est[i];
                dist[i] += e * e;
                trial_avg += e * e;
                second[i] += est[i] * est[i];
                for j in (i + 1)..m {
                    cross.set(i, j, cross.get(i, j) + est[i] * est[j]);
                }
            }
            avg += trial_avg / mf;
        }
        let nf = n as f64;
        for v in dist.iter_mut() {
            *v /= nf;
        }
        for v in second.iter_mut() {
            *v /= nf;
        }
        for i in 0..m {
            cross.set(i, i, second[i]);
            for j in (i + 1)..m {
                let c = cross.get(i, j) / nf;
                cross.set(i, j, c);
                cross.set(j, i, c);
            }
        }
        Batch {
            n,
            dist,
            avg: avg / nf,
            second,
            cross,
        }
    });

    let total = opts.trials as f64;
    let bf = batches as f64;
    let mut per_node = vec![0.0f64; m];
    let mut second = vec![0.0f64; m];
    let mut cross = SquareMatrix::zeros(m);
    let mut avg = 0.0f64;
    for s in &stats {
        let w = s.n as f64 / total;
        avg += w * s.avg;
        for i in 0..m {
            per_node[i] += w * s.dist[i];
            second[i] += w * s.second[i];
            for j in 0..m {
                cross.set(i, j, cross.get(i, j) + w * s.cross.get(i, j));
            }
        }
    }
    let se_of = |extract: &dyn Fn(&Batch) -> f64, center: f64| -> f64 {
        if batches < 2 {
            return 0.0;
        }
        let var = stats
            .iter()
            .map(|s| {
                let d = extract(s) - center;
                d * d
            })
            .sum::<f64>()
            / (bf - 1.0);
        (var / bf).sqrt()
    };
    let per_node_se: Vec<f64> = (0..m)
        .map(|i| se_of(&|s: &Batch| s.dist[i], per_node[i]))
        .collect();
    let second_se: Vec<f64> = (0..m)
        .map(|i| se_of(&|s: &Batch| s.second[i], second[i]))
        .collect();
    let avg_se = se_of(&|s: &Batch| s.avg, avg);

    Ok(MonteCarloResult {
        trials: opts.trials,
        batches,
        seed: opts.seed,
        per_node_distortion: per_node,
        per_node_se,
        avg_distortion: avg,
        avg_distortion_se: avg_se,
        second_moments: second,
        second_moment_se: second_se,
        cross_moments: cross,
    })
}
