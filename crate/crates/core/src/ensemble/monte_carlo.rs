//! Monte Carlo sample-path oracle for the covariance engine.
//!
//! Trials simulate actual scalar estimates through the weighted-sum
//! updates. The description-noise power for node `i` at round `t` is
//! `E(S_i(t)^2) d/(1-d)`; the oracle estimates that second moment from the
//! trial population of its own batch instead of querying the engine, so it
//! shares no propagation code with the implementation it checks. The
//! estimate is unbiased (the update is linear in the injected variance), and
//! because trials within a batch share the estimate, standard errors are
//! computed across independent batches.
//!
//! Sources other than Gaussian are available to probe the claim that the
//! Gaussian analysis carries over to general unit-power sources; the
//! injected description noises stay Gaussian in every mode.

use serde::{Deserialize, Serialize};

use crate::matrix::SquareMatrix;
use crate::parallel::{map_indexed, Parallelism};
use crate::rng;
use crate::topology::Topology;
use crate::{Error, Result};

use rand::Rng;
use rand_distr::StandardNormal;

/// Distribution of the i.i.d. unit-power sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    #[default]
    Gaussian,
    /// +1 or -1 with equal probability.
    Rademacher,
    /// Uniform on [-sqrt(3), sqrt(3)].
    Uniform,
}

impl SourceKind {
    pub(crate) fn sample(self, rng: &mut rng::SimRng) -> f64 {
        match self {
            SourceKind::Gaussian => rng.sample(StandardNormal),
            SourceKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            SourceKind::Uniform => rng.random_range(-1.0f64..1.0) * 3.0f64.sqrt(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloOptions {
    pub trials: usize,
    pub seed: u64,
    pub source: SourceKind,
    /// Number of independent batches for standard errors; 0 picks
    /// `min(100, trials)`.
    pub batches: usize,
    pub parallelism: Parallelism,
}

impl MonteCarloOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            source: SourceKind::Gaussian,
            batches: 0,
            parallelism: Parallelism::default(),
        }
    }

    pub fn with_source(mut self, source: SourceKind) -> Self {
        self.source = source;
        self
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }
}

/// Empirical distortions and final-state moments with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub trials: usize,
    pub batches: usize,
    pub seed: u64,
    /// Mean of `(S - S_i(T))^2` per node, final-estimate rule applied.
    pub per_node_distortion: Vec<f64>,
    pub per_node_se: Vec<f64>,
    pub avg_distortion: f64,
    pub avg_distortion_se: f64,
    /// Empirical `E(S_i(T)^2)` of the raw state.
    pub second_moments: Vec<f64>,
    pub second_moment_se: Vec<f64>,
    /// Empirical `E(S_i(T) S_j(T))` of the raw state, row-major.
    pub cross_moments: SquareMatrix,
}

struct BatchStats {
    n: usize,
    dist: Vec<f64>,
    avg_dist: f64,
    second: Vec<f64>,
    cross: SquareMatrix,
}

fn run_batch(
    m: usize,
    seq: &[(usize, usize)],
    d: f64,
    source: SourceKind,
    participated: &[bool],
    n: usize,
    rng_seed: u64,
    batch_index: u64,
) -> BatchStats {
    let mut rng = rng::substream(rng_seed, batch_index);
    let mf = m as f64;
    let noise_scale = d / (1.0 - d);

    // Initial sources, their true average, and the evolving estimates.
    let mut sources = vec![vec![0.0f64; m]; n];
    let mut truth = vec![0.0f64; n];
    let mut states = vec![vec![0.0f64; m]; n];
    for k in 0..n {
        for x in sources[k].iter_mut() {
            *x = source.sample(&mut rng);
        }
        truth[k] = sources[k].iter().sum::<f64>() / mf;
        states[k].copy_from_slice(&sources[k]);
    }

    for &(i, j) in seq {
        let (sd_i, sd_j) = if d > 0.0 {
            let vi = states.iter().map(|s| s[i] * s[i]).sum::<f64>() / n as f64;
            let vj = states.iter().map(|s| s[j] * s[j]).sum::<f64>() / n as f64;
            ((vi * noise_scale).sqrt(), (vj * noise_scale).sqrt())
        } else {
            (0.0, 0.0)
        };
        for s in states.iter_mut() {
            let (zi, zj) = if d > 0.0 {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                (sd_i * a, sd_j * b)
            } else {
                (0.0, 0.0)
            };
            let sum = s[i] + s[j];
            s[i] = 0.5 * (sum + zj);
            s[j] = 0.5 * (sum + zi);
        }
    }

    let mut dist = vec![0.0f64; m];
    let mut avg_dist = 0.0f64;
    let mut second = vec![0.0f64; m];
    let mut cross = SquareMatrix::zeros(m);
    for k in 0..n {
        let mut trial_avg = 0.0;
        for i in 0..m {
            let est = if participated[i] {
                states[k][i]
            } else {
                sources[k][i] / mf
            };
            let e = truth[k] - est;
            dist[i] += e * e;
            trial_avg += e * e;
        }
        avg_dist += trial_avg / mf;
        for i in 0..m {
            second[i] += states[k][i] * states[k][i];
            for j in (i + 1)..m {
                let c = states[k][i] * states[k][j];
                cross.set(i, j, cross.get(i, j) + c);
            }
        }
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
    BatchStats {
        n,
        dist,
        avg_dist: avg_dist / nf,
        second,
        cross,
    }
}

/// Runs `opts.trials` sample paths of the weighted-sum protocol over the
/// fixed edge sequence `seq` and reports empirical per-node distortions and
/// moments. Deterministic given `opts.seed`, independent of parallelism.
pub fn monte_carlo_run(
    t: &Topology,
    seq: &[(usize, usize)],
    d: f64,
    opts: &MonteCarloOptions,
) -> Result<MonteCarloResult> {
    if opts.trials == 0 {
        return Err(Error::NoTrials);
    }
    if !(0.0..1.0).contains(&d) {
        return Err(Error::InvalidDistortion {
            range: "[0, 1)",
            got: d,
        });
    }
    let m = t.m();
    let mut participated = vec![false; m];
    for &(i, j) in seq {
        if !t.contains_edge(i, j) {
            return Err(Error::EdgeNotInTopology(i, j));
        }
        participated[i] = true;
        participated[j] = true;
    }

    let batches = if opts.batches == 0 {
        opts.trials.min(100)
    } else {
        opts.batches.min(opts.trials)
    };
    let base = opts.trials / batches;
    let rem = opts.trials % batches;

    let stats = map_indexed(opts.parallelism, batches, |b| {
        let n = base + usize::from(b < rem);
        run_batch(m, seq, d, opts.source, &participated, n, opts.seed, b as u64)
    });

    let total = opts.trials as f64;
    let bf = batches as f64;
    let mut per_node = vec![0.0f64; m];
    let mut second = vec![0.0f64; m];
    let mut cross = SquareMatrix::zeros(m);
    let mut avg = 0.0f64;
    for s in &stats {
        let w = s.n as f64 / total;
        avg += w * s.avg_dist;
        for i in 0..m {
            per_node[i] += w * s.dist[i];
            second[i] += w * s.second[i];
            for j in 0..m {
                cross.set(i, j, cross.get(i, j) + w * s.cross.get(i, j));
            }
        }
    }
    // Standard errors from the spread of batch means. Batch sizes differ by
    // at most one trial, so the equal-weight formula is accurate.
    let se_of = |extract: &dyn Fn(&BatchStats) -> f64, center: f64| -> f64 {
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
        .map(|i| se_of(&|s: &BatchStats| s.dist[i], per_node[i]))
        .collect();
    let second_se: Vec<f64> = (0..m)
        .map(|i| se_of(&|s: &BatchStats| s.second[i], second[i]))
        .collect();
    let avg_se = se_of(&|s: &BatchStats| s.avg_dist, avg);

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
