//! Seeded multinomial simulation, Monte Carlo MSE studies and the
//! parametric bootstrap.
//!
//! Replication `i` draws from its own ChaCha stream `(seed, i)`, so results
//! do not depend on how replications are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_q, estimate_q_forced, phi, rho_to_q, Interval};
use crate::exec::Execution;
use crate::types::{QParams, RhoParams, SuccessCounts};

pub const MIN_BOOTSTRAP_REPS: usize = 100;
pub const DEFAULT_BOOTSTRAP_REPS: usize = 2000;

/// Independent generator for replication `index` under `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Multinomial counts from `n` independent categorical draws over the
/// success counts `0..=3`.
pub fn sample_counts<R: Rng + ?Sized>(q: &QParams, n: u64, rng: &mut R) -> Result<SuccessCounts> {
    if !q.is_interior() {
        return Err(Error::InvalidInput(format!(
            "sampling requires every category probability in (0, 1), got {:?}",
            q.with_q0()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let probs = q.with_q0();
    let cumulative = [
        probs[0],
        probs[0] + probs[1],
        probs[0] + probs[1] + probs[2],
    ];
    let mut counts = [0u64; 4];
    for _ in 0..n {
        let u: f64 = rng.random();
        let s = cumulative.iter().position(|&c| u < c).unwrap_or(3);
        counts[s] += 1;
    }
    SuccessCounts::new(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rho0: RhoParams,
    /// Triplets per replication.
    pub n: u64,
    pub reps: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Checks the configuration and returns the true category probabilities.
    pub fn validate(&self) -> Result<QParams> {
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidInput("reps must be at least 1".into()));
        }
        let q0 = rho_to_q(&self.rho0)?;
        if !q0.is_interior() {
            return Err(Error::InvalidInput(format!(
                "rho0 puts zero mass on a category: q = {:?}",
                q0.with_q0()
            )));
        }
        Ok(q0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseResult {
    pub config: SimConfig,
    pub q0: QParams,
    /// Mean squared error of `(pi, rho1, rho2)` over the used replications.
    pub mse: [f64; 3],
    pub bias: [f64; 3],
    /// Sample variance of the estimates across used replications.
    pub variance: [f64; 3],
    /// Replications where `pi_hat` was 0 or 1, excluded from the averages.
    pub skipped: usize,
    /// Replications with at least one empty category (still used when
    /// `pi_hat` is interior).
    pub void_replications: usize,
}

impl MseResult {
    pub fn used(&self) -> usize {
        self.config.reps - self.skipped
    }
}

struct Replicate {
    estimate: Option<[f64; 3]>,
    void: bool,
}

fn replicate(q: &QParams, n: u64, seed: u64, index: usize) -> Replicate {
    let mut rng = replication_rng(seed, index as u64);
    let counts = sample_counts(q, n, &mut rng).expect("validated sampling parameters");
    let estimate = phi(&estimate_q_forced(&counts)).ok().map(|r| r.as_array());
    Replicate {
        estimate,
        void: counts.first_void().is_some(),
    }
}

/// Monte Carlo mean squared error of `phi(q_hat)` around `rho0`.
pub fn run_mse_study(config: &SimConfig) -> Result<MseResult> {
    run_mse_study_with(config, Execution::default())
}

pub fn run_mse_study_with(config: &SimConfig, exec: Execution) -> Result<MseResult> {
    let q0 = config.validate()?;
    let reps = exec.map_indexed(config.reps, |i| replicate(&q0, config.n, config.seed, i));

    let truth = config.rho0.as_array();
    let used: Vec<[f64; 3]> = reps.iter().filter_map(|r| r.estimate).collect();
    let skipped = config.reps - used.len();
    if used.is_empty() {
        return Err(Error::AllSkipped { reps: config.reps });
    }
    let m = used.len() as f64;
    let mut mse = [0.0; 3];
    let mut bias = [0.0; 3];
    let mut mean = [0.0; 3];
    for est in &used {
        for j in 0..3 {
            let err = est[j] - truth[j];
            mse[j] += err * err;
            bias[j] += err;
            mean[j] += est[j];
        }
    }
    for j in 0..3 {
        mse[j] /= m;
        bias[j] /= m;
        mean[j] /= m;
    }
    let mut variance = [0.0; 3];
    if used.len() > 1 {
        for est in &used {
            for j in 0..3 {
                variance[j] += (est[j] - mean[j]).powi(2);
            }
        }
        for v in &mut variance {
            *v /= m - 1.0;
        }
    }
    Ok(MseResult {
        config: *config,
        q0,
        mse,
        bias,
        variance,
        skipped,
        void_replications: reps.iter().filter(|r| r.void).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub counts: SuccessCounts,
    pub estimate: RhoParams,
    pub reps: usize,
    pub seed: u64,
    pub level: f64,
    /// Standard deviation of the replicate estimates of `(pi, rho1, rho2)`.
    pub se: [f64; 3],
    /// Percentile intervals at `level`.
    pub ci: [Interval; 3],
    pub skipped: usize,
    pub void_replicates: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Parametric bootstrap: resample counts from `multinomial(n; q_hat)` and
/// re-estimate `(pi, rho1, rho2)` on each replicate.
pub fn parametric_bootstrap(
    counts: &SuccessCounts,
    reps: usize,
    seed: u64,
    level: f64,
) -> Result<BootstrapResult> {
    parametric_bootstrap_with(counts, reps, seed, level, Execution::default())
}

pub fn parametric_bootstrap_with(
    counts: &SuccessCounts,
    reps: usize,
    seed: u64,
    level: f64,
    exec: Execution,
) -> Result<BootstrapResult> {
    if reps < MIN_BOOTSTRAP_REPS {
        return Err(Error::MinReps {
            min: MIN_BOOTSTRAP_REPS,
            got: reps,
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let q_hat = estimate_q(counts)?;
    let estimate = phi(&q_hat)?;
    let n = counts.n();
    let draws = exec.map_indexed(reps, |i| replicate(&q_hat, n, seed, i));

    let used: Vec<[f64; 3]> = draws.iter().filter_map(|r| r.estimate).collect();
    let skipped = reps - used.len();
    if 2 * skipped > reps || used.len() < 2 {
        return Err(Error::TooManySkipped { skipped, reps });
    }
    let alpha = 1.0 - level;
    let mut se = [0.0; 3];
    let mut ci = [Interval {
        lower: 0.0,
        upper: 0.0,
        truncated: false,
    }; 3];
    for j in 0..3 {
        let mut column: Vec<f64> = used.iter().map(|e| e[j]).collect();
        let m = column.len() as f64;
        let mean = column.iter().sum::<f64>() / m;
        se[j] = (column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
        column.sort_by(f64::total_cmp);
        ci[j] = Interval {
            lower: quantile(&column, alpha / 2.0),
            upper: quantile(&column, 1.0 - alpha / 2.0),
            truncated: false,
        };
    }
    Ok(BootstrapResult {
        counts: *counts,
        estimate,
        reps,
        seed,
        level,
        se,
        ci,
        skipped,
        void_replicates: draws.iter().filter(|r| r.void).count(),
    })
}
