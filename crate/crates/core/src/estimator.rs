//! Closed-form maximum-likelihood estimation for triplet data.
//!
//! The success count of a triplet is multinomial, so the MLE of `q` is the
//! vector of observed category frequencies. By invariance the MLE of
//! `(pi, rho1, rho2)` is `phi(q_hat)`. Standard errors come from the delta
//! method, `phi' Sigma phi'^T`, with `q_hat` plugged in for the unknown truth.
//!
//! In terms of `q`, the moments entering the correlations are
//!
//! ```text
//! pi   = q1/3 + 2 q2/3 + q3      P(X1 = 1)
//! m2   = q2/3 + q3               E(X1 X2)
//! m3   = q3                      E(X1 X2 X3)
//! rho1 = (m2 - pi^2) / (pi (1 - pi))
//! rho2 = (m3 - 3 pi m2 + 2 pi^3) / (pi (1 - pi))^(3/2)
//! ```

use nalgebra::{Matrix3, RowVector3, Vector3};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::types::{QParams, RhoParams, SuccessCounts, TripletData};

const PI_GRADIENT: [f64; 3] = [1.0 / 3.0, 2.0 / 3.0, 1.0];
const M2_GRADIENT: [f64; 3] = [0.0, 1.0 / 3.0, 1.0];
const M3_GRADIENT: [f64; 3] = [0.0, 0.0, 1.0];

pub fn count_successes(data: &TripletData) -> SuccessCounts {
    let mut counts = [0u64; 4];
    for row in data.rows() {
        let s: usize = row.iter().map(|&v| v as usize).sum();
        counts[s] += 1;
    }
    // n >= 1 is guaranteed by TripletData
    SuccessCounts::new(counts).expect("non-empty data")
}

/// Category frequencies `n_h / n`. Fails with [`Error::VoidCategory`] when
/// some success count was never observed.
pub fn estimate_q(counts: &SuccessCounts) -> Result<QParams> {
    if let Some(s) = counts.first_void() {
        return Err(Error::VoidCategory {
            successes: s,
            counts: counts.counts(),
        });
    }
    Ok(estimate_q_forced(counts))
}

/// Category frequencies without the non-void check.
pub fn estimate_q_forced(counts: &SuccessCounts) -> QParams {
    let n = counts.n() as f64;
    let c = counts.counts();
    QParams::unchecked([c[1] as f64 / n, c[2] as f64 / n, c[3] as f64 / n])
}

fn proportion(q: &QParams) -> f64 {
    q.q1 / 3.0 + 2.0 * q.q2 / 3.0 + q.q3
}

fn nondegenerate_pi(q: &QParams) -> Result<f64> {
    let pi = proportion(q);
    if pi <= 0.0 || pi >= 1.0 || !pi.is_finite() {
        return Err(Error::DegenerateProportion { pi });
    }
    Ok(pi)
}

/// The Bahadur map `q -> (pi, rho1, rho2)`.
pub fn phi(q: &QParams) -> Result<RhoParams> {
    let pi = nondegenerate_pi(q)?;
    let m2 = q.q2 / 3.0 + q.q3;
    let m3 = q.q3;
    let v = pi * (1.0 - pi);
    Ok(RhoParams {
        pi,
        rho1: (m2 - pi * pi) / v,
        rho2: (m3 - 3.0 * pi * m2 + 2.0 * pi * pi * pi) / v.powf(1.5),
    })
}

/// Inverse of [`phi`]. Fails with [`Error::Inadmissible`] when the implied
/// category probabilities leave `[0, 1]`, i.e. no triplet distribution has
/// these moments.
pub fn rho_to_q(rho: &RhoParams) -> Result<QParams> {
    let RhoParams { pi, rho1, rho2 } = *rho;
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::DegenerateProportion { pi });
    }
    let v = pi * (1.0 - pi);
    let m2 = rho1 * v + pi * pi;
    let q3 = rho2 * v.powf(1.5) + 3.0 * pi * m2 - 2.0 * pi * pi * pi;
    let q2 = 3.0 * (m2 - q3);
    let q1 = 3.0 * pi - 2.0 * q2 - 3.0 * q3;
    let q0 = 1.0 - q1 - q2 - q3;
    let all = [q0, q1, q2, q3];
    if all.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Inadmissible {
            pi,
            rho1,
            rho2,
            q: all,
        });
    }
    Ok(QParams::unchecked([q1, q2, q3]))
}

/// Jacobian of [`phi`]; row `i` is the gradient of the `i`-th coordinate of
/// `(pi, rho1, rho2)` with respect to `(q1, q2, q3)`.
pub fn jacobian_phi(q: &QParams) -> Result<Matrix3<f64>> {
    let pi = nondegenerate_pi(q)?;
    let m2 = q.q2 / 3.0 + q.q3;
    let m3 = q.q3;
    let v = pi * (1.0 - pi);

    let d_pi = RowVector3::from(PI_GRADIENT);
    let d_m2 = RowVector3::from(M2_GRADIENT);
    let d_m3 = RowVector3::from(M3_GRADIENT);
    let d_v = d_pi * (1.0 - 2.0 * pi);

    // rho1 = n1 / v
    let n1 = m2 - pi * pi;
    let d_n1 = d_m2 - d_pi * (2.0 * pi);
    let d_rho1 = (d_n1 * v - d_v * n1) / (v * v);

    // rho2 = n2 / v^(3/2)
    let n2 = m3 - 3.0 * pi * m2 + 2.0 * pi * pi * pi;
    let d_n2 = d_m3 - d_pi * (3.0 * m2) - d_m2 * (3.0 * pi) + d_pi * (6.0 * pi * pi);
    let d_rho2 = d_n2 / v.powf(1.5) - d_v * (1.5 * n2 / v.powf(2.5));

    Ok(Matrix3::from_rows(&[d_pi, d_rho1, d_rho2]))
}

/// Multinomial covariance of `sqrt(n) (q_hat - q)`.
pub fn sigma_q(q: &QParams) -> Matrix3<f64> {
    let v = Vector3::from(q.as_array());
    Matrix3::from_diagonal(&v) - v * v.transpose()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    /// Asymptotic covariance of `sqrt(n) (q_hat - q)`.
    pub sigma_q: [[f64; 3]; 3],
    pub jacobian: [[f64; 3]; 3],
    /// Asymptotic covariance of `sqrt(n) (rho_hat - rho)`.
    pub sigma_rho: [[f64; 3]; 3],
    /// Standard errors of `(pi, rho1, rho2)` at sample size `n`.
    pub se: [f64; 3],
    pub n: u64,
}

impl CovarianceReport {
    pub fn sigma_q_matrix(&self) -> Matrix3<f64> {
        from_rows(&self.sigma_q)
    }

    pub fn jacobian_matrix(&self) -> Matrix3<f64> {
        from_rows(&self.jacobian)
    }

    pub fn sigma_rho_matrix(&self) -> Matrix3<f64> {
        from_rows(&self.sigma_rho)
    }
}

fn to_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = m[(i, j)];
        }
    }
    out
}

fn from_rows(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| rows[i][j])
}

/// Delta-method covariance `phi' Sigma phi'^T` evaluated at `q`, with
/// standard errors for sample size `n`.
pub fn sigma_rho(q: &QParams, n: u64) -> Result<CovarianceReport> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    let sigma = sigma_q(q);
    let jac = jacobian_phi(q)?;
    let tilde = jac * sigma * jac.transpose();
    // exact symmetry; the product is symmetric only up to rounding
    let tilde = (tilde + tilde.transpose()) * 0.5;
    if tilde.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteVariance);
    }
    let se = [0, 1, 2].map(|j| (tilde[(j, j)].max(0.0) / n as f64).sqrt());
    Ok(CovarianceReport {
        sigma_q: to_rows(&sigma),
        jacobian: to_rows(&jac),
        sigma_rho: to_rows(&tilde),
        se,
        n,
    })
}

/// Pooled proportion of successes over all `3n` outcomes.
pub fn estimate_pi_direct(data: &TripletData) -> f64 {
    let successes: u64 = data
        .rows()
        .iter()
        .map(|r| r.iter().map(|&v| v as u64).sum::<u64>())
        .sum();
    successes as f64 / (3 * data.n()) as f64
}

/// Variance of `pi_hat` when the `3n` outcomes are treated as independent.
pub fn srs_variance(pi_hat: f64, n: u64) -> f64 {
    pi_hat * (1.0 - pi_hat) / (3.0 * n as f64)
}

/// Ratio of the clustered standard error of `pi_hat` to its srs counterpart.
pub fn design_effect(se_cluster: f64, se_srs: f64) -> Result<f64> {
    if se_srs == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    if !(se_cluster.is_finite() && se_srs.is_finite()) || se_srs < 0.0 {
        return Err(Error::NonFiniteVariance);
    }
    Ok(se_cluster / se_srs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    /// Set when either end was clipped to the natural parameter range.
    pub truncated: bool,
}

/// Two-sided standard normal quantile `z_{1 - alpha/2}` for `level = 1 - alpha`.
pub fn normal_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(std.inverse_cdf(0.5 + level / 2.0))
}

/// Wald intervals for `(pi, rho1, rho2)`. With `truncate`, the `pi` interval
/// is clipped to `[0, 1]` and the correlation intervals to `[-1, 1]`.
pub fn confidence_intervals(
    estimate: &RhoParams,
    se: &[f64; 3],
    level: f64,
    truncate: bool,
) -> Result<[Interval; 3]> {
    let z = normal_quantile(level)?;
    if se.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::NonFiniteVariance);
    }
    let ranges = [(0.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)];
    let est = estimate.as_array();
    Ok([0, 1, 2].map(|j| {
        let (lo, hi) = (est[j] - z * se[j], est[j] + z * se[j]);
        if truncate {
            let (min, max) = ranges[j];
            Interval {
                lower: lo.max(min),
                upper: hi.min(max),
                truncated: lo < min || hi > max,
            }
        } else {
            Interval {
                lower: lo,
                upper: hi,
                truncated: false,
            }
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub level: f64,
    /// Proceed when some category is empty; standard errors may then be
    /// unreliable.
    pub force_void: bool,
    pub truncate: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            level: 0.95,
            force_void: false,
            truncate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub counts: SuccessCounts,
    pub q_hat: QParams,
    pub rho_hat: RhoParams,
    pub cov: CovarianceReport,
    pub level: f64,
    /// Intervals for `pi`, `rho1`, `rho2` in that order.
    pub ci: [Interval; 3],
    pub srs_se: f64,
    pub design_effect: f64,
    /// Set when estimation proceeded despite an empty category.
    pub void_categories: bool,
}

/// Point estimates, delta-method covariance, Wald intervals and the srs
/// comparison from the sufficient statistic.
pub fn estimate(counts: &SuccessCounts, opts: &EstimateOptions) -> Result<EstimationReport> {
    let void = counts.first_void().is_some();
    let q_hat = if opts.force_void {
        estimate_q_forced(counts)
    } else {
        estimate_q(counts)?
    };
    let rho_hat = phi(&q_hat)?;
    let cov = sigma_rho(&q_hat, counts.n())?;
    let ci = confidence_intervals(&rho_hat, &cov.se, opts.level, opts.truncate)?;
    let srs_se = srs_variance(rho_hat.pi, counts.n()).sqrt();
    let design_effect = design_effect(cov.se[0], srs_se)?;
    Ok(EstimationReport {
        counts: *counts,
        q_hat,
        rho_hat,
        cov,
        level: opts.level,
        ci,
        srs_se,
        design_effect,
        void_categories: void,
    })
}
