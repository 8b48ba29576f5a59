//! Runtime oracle suite for the score function and the estimator.
//!
//! Every check evaluates a closed form against an independent route
//! (finite differences, enumeration over the four outcomes, matrix algebra)
//! or against a uniform bound, on seeded random grids.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{jacobian_phi, phi, sigma_q};
use crate::score::{
    bound_hessian, bound_psi, expected_score, expected_score_derivative,
    expected_score_derivative_determinant, observation_log_likelihood, outcome_probabilities,
    score_derivative, score_psi, score_second_derivative, score_second_moment,
};
use crate::types::{IndicatorVector, QParams};

pub const FIRST_DERIVATIVE_STEP: f64 = 1e-6;
pub const SECOND_DERIVATIVE_STEP: f64 = 1e-4;

pub const JACOBIAN_TOLERANCE: f64 = 1e-6;
pub const GRADIENT_TOLERANCE: f64 = 1e-5;
pub const SCORE_DERIVATIVE_TOLERANCE: f64 = 1e-5;
pub const SECOND_DERIVATIVE_TOLERANCE: f64 = 1e-4;
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-12;

/// Smallest category probability used for derivative and identity points.
const DERIVATIVE_MARGIN: f64 = 0.02;
const IDENTITY_MARGIN: f64 = 0.05;
const BRACKET_EPSILONS: [f64; 2] = [1e-3, 1e-2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    pub xi: f64,
    pub seed: u64,
    /// Random interior points of the bound grid.
    pub grid_points: usize,
    pub derivative_points: usize,
    pub identity_points: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            xi: 0.1,
            seed: 0x7269_706c_6574,
            grid_points: 100,
            derivative_points: 50,
            identity_points: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub evaluated: usize,
    pub violations: usize,
    /// Largest observed error (or bound utilisation for bound checks).
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            evaluated: 0,
            violations: 0,
            worst: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, error: f64) {
        self.evaluated += 1;
        if error.is_nan() || error > self.tolerance {
            self.violations += 1;
        }
        if error.is_nan() || error > self.worst {
            self.worst = error;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.evaluated > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub config: DiagnosticsConfig,
    pub checks: Vec<CheckResult>,
}

impl DiagnosticReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Magnitude below which errors are measured absolutely. Finite differences
/// of an entry that vanishes analytically carry round-off of order
/// `eps |f| / h`, which no relative measure can absorb.
pub const RELATIVE_ERROR_FLOOR: f64 = 1.0;

/// `|approx - exact| / max(|exact|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(RELATIVE_ERROR_FLOOR)
}

/// Uniform sample from `{q : q_s >= margin for s = 0..=3}`.
pub fn sample_simplex<R: Rng>(rng: &mut R, margin: f64) -> QParams {
    let e: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
    let total: f64 = e.iter().sum();
    let free = 1.0 - 4.0 * margin;
    QParams::unchecked([
        margin + free * e[1] / total,
        margin + free * e[2] / total,
        margin + free * e[3] / total,
    ])
}

/// Points of `[xi, 1 - xi]^3` with `q0 >= xi` at which the bounds are
/// checked: `random` uniform interior points, the four vertices of the
/// region (one category at `1 - 3 xi`, the rest at `xi`), the six edge
/// midpoints and the centroid.
pub fn bound_grid(xi: f64, random: usize, seed: u64) -> Result<Vec<QParams>> {
    if !(xi > 0.0 && xi < 0.25) {
        return Err(Error::InvalidInput(format!(
            "xi must lie in (0, 1/4) for a non-empty check region, got {xi}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<QParams> = (0..random).map(|_| sample_simplex(&mut rng, xi)).collect();

    let vertices: Vec<[f64; 4]> = (0..4)
        .map(|v| std::array::from_fn(|s| if s == v { 1.0 - 3.0 * xi } else { xi }))
        .collect();
    let mut push = |p: [f64; 4]| points.push(QParams::unchecked([p[1], p[2], p[3]]));
    for v in &vertices {
        push(*v);
    }
    for a in 0..4 {
        for b in a + 1..4 {
            push(std::array::from_fn(|s| {
                0.5 * (vertices[a][s] + vertices[b][s])
            }));
        }
    }
    push([0.25; 4]);
    Ok(points)
}

fn with_offset(q: &QParams, k: usize, h: f64) -> QParams {
    let mut a = q.as_array();
    a[k] += h;
    QParams::unchecked(a)
}

fn check_bounds(xi: f64, grid: &[QParams]) -> (CheckResult, CheckResult) {
    // worst = largest ratio of value to bound; violation when it exceeds 1
    let mut envelope = CheckResult::new("psi_envelope", 1.0);
    let mut hessian = CheckResult::new("hessian_bound", 1.0);
    for q in grid {
        for x in IndicatorVector::OUTCOMES {
            envelope.record(score_psi(q, x).norm() / bound_psi(xi, x));
            let bound = bound_hessian(xi, x);
            let t = score_second_derivative(q, x);
            let max_entry = t
                .iter()
                .flatten()
                .flatten()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            hessian.record(max_entry / bound);
        }
    }
    (envelope, hessian)
}

fn check_derivatives(points: &[QParams]) -> Vec<CheckResult> {
    let h1 = FIRST_DERIVATIVE_STEP;
    let h2 = SECOND_DERIVATIVE_STEP;
    let mut gradient = CheckResult::new("score_gradient_fd", GRADIENT_TOLERANCE);
    let mut first = CheckResult::new("score_derivative_fd", SCORE_DERIVATIVE_TOLERANCE);
    let mut second = CheckResult::new("score_second_derivative_fd", SECOND_DERIVATIVE_TOLERANCE);
    let mut jacobian = CheckResult::new("jacobian_phi_fd", JACOBIAN_TOLERANCE);

    for q in points {
        for x in IndicatorVector::OUTCOMES {
            let psi = score_psi(q, x);
            let dpsi = score_derivative(q, x);
            let ddpsi = score_second_derivative(q, x);
            for k in 0..3 {
                let (up, dn) = (with_offset(q, k, h1), with_offset(q, k, -h1));
                let fd = (observation_log_likelihood(&up, x) - observation_log_likelihood(&dn, x))
                    / (2.0 * h1);
                gradient.record(relative_error(fd, psi[k]));

                let fd: Vector3<f64> = (score_psi(&up, x) - score_psi(&dn, x)) / (2.0 * h1);
                for h in 0..3 {
                    first.record(relative_error(fd[h], dpsi[(h, k)]));
                }

                let (up, dn) = (with_offset(q, k, h2), with_offset(q, k, -h2));
                let fd: Matrix3<f64> =
                    (score_derivative(&up, x) - score_derivative(&dn, x)) / (2.0 * h2);
                for h in 0..3 {
                    for l in 0..3 {
                        second.record(relative_error(fd[(h, l)], ddpsi[h][l][k]));
                    }
                }
            }
        }

        let Ok(jac) = jacobian_phi(q) else {
            jacobian.record(f64::NAN);
            continue;
        };
        for k in 0..3 {
            let up = phi(&with_offset(q, k, h1));
            let dn = phi(&with_offset(q, k, -h1));
            let (Ok(up), Ok(dn)) = (up, dn) else {
                jacobian.record(f64::NAN);
                continue;
            };
            let (up, dn) = (up.as_array(), dn.as_array());
            for i in 0..3 {
                jacobian.record(relative_error((up[i] - dn[i]) / (2.0 * h1), jac[(i, k)]));
            }
        }
    }
    vec![gradient, first, second, jacobian]
}

fn check_identities(points: &[QParams]) -> Vec<CheckResult> {
    let mut enumeration = CheckResult::new("expected_score_enumeration", ZERO_MEAN_TOLERANCE);
    let mut zero_mean = CheckResult::new("zero_mean_at_truth", ZERO_MEAN_TOLERANCE);
    let mut moment = CheckResult::new("score_second_moment", IDENTITY_TOLERANCE);
    let mut inverse = CheckResult::new("inverse_identity", IDENTITY_TOLERANCE);
    let mut determinant = CheckResult::new("expected_derivative_determinant", IDENTITY_TOLERANCE);
    let mut expectation = CheckResult::new("expected_derivative_enumeration", IDENTITY_TOLERANCE);
    // worst = 1 marks a sign failure
    let mut bracketing = CheckResult::new("bracketing_sign", 0.0);

    let probe = QParams::unchecked([0.25, 0.25, 0.25]);
    for q0 in points {
        let probs = outcome_probabilities(q0);
        let outcomes = IndicatorVector::OUTCOMES;

        let mut mean = Vector3::zeros();
        let mut mean_probe = Vector3::zeros();
        let mut second = 0.0;
        let mut dpsi = Matrix3::zeros();
        for (x, p) in outcomes.iter().zip(probs) {
            let psi = score_psi(q0, *x);
            mean += psi * p;
            mean_probe += score_psi(&probe, *x) * p;
            second += p * psi.norm_squared();
            dpsi += score_derivative(q0, *x) * p;
        }
        zero_mean.record(mean.amax());
        enumeration.record((expected_score(q0, &probe) - mean_probe).amax());
        moment.record(relative_error(second, score_second_moment(q0)));

        let closed = expected_score_derivative(q0);
        expectation.record((closed - dpsi).amax() / closed.amax());
        determinant.record(relative_error(
            closed.determinant(),
            expected_score_derivative_determinant(q0),
        ));
        match closed.try_inverse() {
            Some(inv) => inverse.record((inv + sigma_q(q0)).amax()),
            None => inverse.record(f64::NAN),
        }

        for eps in BRACKET_EPSILONS {
            let below = QParams::unchecked(q0.as_array().map(|v| v - eps));
            let above = QParams::unchecked(q0.as_array().map(|v| v + eps));
            let ok = expected_score(q0, &below).iter().all(|&v| v > 0.0)
                && expected_score(q0, &above).iter().all(|&v| v < 0.0);
            bracketing.record(if ok { 0.0 } else { 1.0 });
        }
    }
    vec![
        enumeration,
        zero_mean,
        moment,
        expectation,
        determinant,
        inverse,
        bracketing,
    ]
}

/// Runs the full oracle and bound suite.
pub fn run_diagnostics(config: &DiagnosticsConfig) -> Result<DiagnosticReport> {
    let grid = bound_grid(config.xi, config.grid_points, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let derivative_points: Vec<_> = (0..config.derivative_points)
        .map(|_| sample_simplex(&mut rng, DERIVATIVE_MARGIN))
        .collect();
    rng.set_stream(2);
    let identity_points: Vec<_> = (0..config.identity_points)
        .map(|_| sample_simplex(&mut rng, IDENTITY_MARGIN))
        .collect();

    let (envelope, hessian) = check_bounds(config.xi, &grid);
    let mut checks = vec![envelope, hessian];
    checks.extend(check_derivatives(&derivative_points));
    checks.extend(check_identities(&identity_points));
    Ok(DiagnosticReport {
        config: *config,
        checks,
    })
}
