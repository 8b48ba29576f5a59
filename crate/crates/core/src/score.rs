//! Score function of the multinomial triplet model and its derivatives.
//!
//! For one triplet with indicators `x = (1{S=1}, 1{S=2}, 1{S=3})` the
//! log-likelihood contribution is `sum_h x_h ln q_h + (1 - sum x) ln q0`.
//! Everything here is evaluated in closed form; the functions double as
//! oracles for the estimator and for the asymptotic theory.

use nalgebra::{Matrix3, Vector3};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::types::{IndicatorVector, QParams, SuccessCounts};

/// `T[h][k][l] = d^2 psi_h / (dq_k dq_l)`.
pub type Tensor3 = [[[f64; 3]; 3]; 3];

fn require_interior(q: &QParams) -> Result<()> {
    if q.is_interior() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "q must lie in the open simplex interior, got {:?}",
            q.with_q0()
        )))
    }
}

/// Probability of each of the four outcomes `S = 0..=3` under `q`.
pub fn outcome_probabilities(q: &QParams) -> [f64; 4] {
    q.with_q0()
}

/// `n^-1` times the log of the multinomial pmf of `counts` under `q`.
pub fn log_likelihood(counts: &SuccessCounts, q: &QParams) -> Result<f64> {
    require_interior(q)?;
    let n = counts.n() as f64;
    let probs = q.with_q0();
    let mut ll = ln_gamma(n + 1.0);
    for (&c, &p) in counts.counts().iter().zip(probs.iter()) {
        let c = c as f64;
        ll += c * p.ln() - ln_gamma(c + 1.0);
    }
    Ok(ll / n)
}

/// Log-likelihood contribution of a single triplet.
pub fn observation_log_likelihood(q: &QParams, x: IndicatorVector) -> f64 {
    let xv = x.as_f64();
    let qv = q.as_array();
    let mut ll = (1.0 - x.sum()) * q.q0().ln();
    for h in 0..3 {
        if xv[h] != 0.0 {
            ll += xv[h] * qv[h].ln();
        }
    }
    ll
}

/// Score `psi_q(x)`, the gradient in `q` of the per-triplet log-likelihood.
pub fn score_psi(q: &QParams, x: IndicatorVector) -> Vector3<f64> {
    let qv = q.as_array();
    let xv = x.as_f64();
    let d = q.q0();
    let total_q: f64 = qv.iter().sum();
    let total_x = x.sum();
    Vector3::from_fn(|h, _| {
        let others_q = total_q - qv[h];
        let others_x = total_x - xv[h];
        ((1.0 - others_q) * xv[h] + qv[h] * (others_x - 1.0)) / (qv[h] * d)
    })
}

/// Expected score `E_{q0} psi_q`.
pub fn expected_score(q0: &QParams, q: &QParams) -> Vector3<f64> {
    let truth = q0.as_array();
    let at = q.as_array();
    let ratio = q0.q0() / q.q0();
    Vector3::from_fn(|h, _| truth[h] / at[h] - ratio)
}

/// Jacobian of [`score_psi`]: `M[h][k] = d psi_h / dq_k`.
pub fn score_derivative(q: &QParams, x: IndicatorVector) -> Matrix3<f64> {
    let qv = q.as_array();
    let xv = x.as_f64();
    let d = q.q0();
    let total_q: f64 = qv.iter().sum();
    let total_x = x.sum();
    let off = (total_x - 1.0) / (d * d);
    Matrix3::from_fn(|h, k| {
        if h != k {
            return off;
        }
        let others_q = total_q - qv[h];
        let others_x = total_x - xv[h];
        let qh = qv[h];
        ((1.0 - others_q) * xv[h] * (qh - 1.0 + total_q) + qh * qh * (others_x - 1.0))
            / (qh * qh * d * d)
    })
}

/// Second derivative tensor of [`score_psi`].
pub fn score_second_derivative(q: &QParams, x: IndicatorVector) -> Tensor3 {
    let qv = q.as_array();
    let xv = x.as_f64();
    let d = q.q0();
    let total_q: f64 = qv.iter().sum();
    let total_x = x.sum();
    let off = 2.0 * (total_x - 1.0) / (d * d * d);
    let mut t = [[[off; 3]; 3]; 3];
    for h in 0..3 {
        let qh = qv[h];
        let a = -1.0 + total_q - qh;
        let others_x = total_x - xv[h];
        t[h][h][h] = (2.0 * xv[h] * (-a) * (3.0 * qh * qh + 3.0 * qh * a + a * a)
            + 2.0 * qh * qh * qh * (others_x - 1.0))
            / (qh.powi(3) * d.powi(3));
    }
    t
}

/// Closed form of `E_{q0}[score_derivative(q0, X)]`, which equals
/// `-(diag(1/q0_h) + J / q0_0)` with `J` the all-ones matrix.
pub fn expected_score_derivative(q0: &QParams) -> Matrix3<f64> {
    let qv = q0.as_array();
    let d = q0.q0();
    Matrix3::from_fn(|h, k| {
        if h == k {
            -1.0 / d - 1.0 / qv[h]
        } else {
            -1.0 / d
        }
    })
}

/// `-(q1 q2 q3 q0)^-1`, the determinant of [`expected_score_derivative`].
pub fn expected_score_derivative_determinant(q0: &QParams) -> f64 {
    -1.0 / (q0.q1 * q0.q2 * q0.q3 * q0.q0())
}

/// `E_{q0} ||psi_{q0}||^2 = 1/q1 + 1/q2 + 1/q3 + 3/q0`.
pub fn score_second_moment(q0: &QParams) -> f64 {
    1.0 / q0.q1 + 1.0 / q0.q2 + 1.0 / q0.q3 + 3.0 / q0.q0()
}

fn check_xi(xi: f64) {
    assert!(
        xi > 0.0 && xi < 1.0 / 3.0,
        "xi must lie in (0, 1/3), got {xi}"
    );
}

/// Uniform envelope for `||psi_q(x)||` over the box `[xi, 1 - xi]^3` with
/// `q0 >= xi`.
///
/// The envelope `sqrt(3) (1 - xi) / xi^2` does not depend on `x`: the
/// per-coordinate bound carries the factor `|x1 + x2 + x3 - 1| <= 1`, and a
/// factor `x1 + x2 + x3` would vanish at `x = 0` where the score does not.
///
/// # Panics
/// If `xi` is outside `(0, 1/3)`.
pub fn bound_psi(xi: f64, _x: IndicatorVector) -> f64 {
    check_xi(xi);
    3f64.sqrt() * (1.0 - xi) / (xi * xi)
}

/// Per-coordinate diagonal bounds `g_h(x)` of the second derivative.
pub fn hessian_diagonal_bounds(xi: f64, x: IndicatorVector) -> [f64; 3] {
    check_xi(xi);
    let xv = x.as_f64();
    let total = x.sum();
    let scale = 2.0 * (1.0 - xi).powi(3) / xi.powi(6);
    [0, 1, 2].map(|h| scale * (7.0 * xv[h].abs() + (total - xv[h] - 1.0).abs()))
}

/// Bound `g(x)` shared by all off-diagonal second-derivative entries.
pub fn hessian_offdiagonal_bound(xi: f64, x: IndicatorVector) -> f64 {
    check_xi(xi);
    2.0 / xi.powi(3) * (x.sum() - 1.0).abs()
}

/// Envelope for every entry of [`score_second_derivative`] over the box:
/// the maximum of the three diagonal bounds and the off-diagonal bound.
///
/// # Panics
/// If `xi` is outside `(0, 1/3)`.
pub fn bound_hessian(xi: f64, x: IndicatorVector) -> f64 {
    hessian_diagonal_bounds(xi, x)
        .into_iter()
        .fold(hessian_offdiagonal_bound(xi, x), f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quarter() -> QParams {
        QParams::new(0.25, 0.25, 0.25).unwrap()
    }

    fn x(v: [u8; 3]) -> IndicatorVector {
        IndicatorVector::new(v).unwrap()
    }

    #[test]
    fn score_psi_examples() {
        let psi = score_psi(&quarter(), x([1, 0, 0]));
        assert_abs_diff_eq!(psi[0], 4.0, epsilon = 1e-14);
        for q in [quarter(), QParams::new(0.2052, 0.0378, 0.0064).unwrap()] {
            let psi = score_psi(&q, x([0, 0, 0]));
            for h in 0..3 {
                assert_abs_diff_eq!(psi[h], -1.0 / q.q0(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn score_vanishes_at_mle() {
        let counts = SuccessCounts::new([1, 3, 11, 22]).unwrap();
        let q = crate::estimator::estimate_q(&counts).unwrap();
        let mut total = Vector3::zeros();
        for s in 0..4 {
            total += score_psi(&q, IndicatorVector::from_successes(s)) * counts.get(s) as f64;
        }
        total /= counts.n() as f64;
        assert!(total.amax() < 1e-10, "{total:?}");
    }

    #[test]
    fn expected_score_examples() {
        let q0 = QParams::new(0.2052, 0.0378, 0.0064).unwrap();
        assert!(expected_score(&q0, &q0).amax() < 1e-15);
        let eps = 1e-3;
        let below = QParams::new(q0.q1 - eps, q0.q2 - eps, q0.q3 - eps).unwrap();
        assert!(expected_score(&q0, &below).iter().all(|&v| v > 0.0));

        let q = quarter();
        let probs = outcome_probabilities(&q0);
        let mut enumerated = Vector3::zeros();
        for (s, p) in probs.iter().enumerate() {
            enumerated += score_psi(&q, IndicatorVector::from_successes(s)) * *p;
        }
        let closed = expected_score(&q0, &q);
        assert!((closed - enumerated).amax() < 1e-12);
    }

    #[test]
    fn score_derivative_offdiagonal() {
        let m = score_derivative(&quarter(), x([0, 0, 0]));
        assert_abs_diff_eq!(m[(0, 1)], -16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m[(2, 0)], -16.0, epsilon = 1e-12);
    }

    #[test]
    fn expected_derivative_matches_enumeration_and_inverse() {
        let q0 = QParams::new(0.2052, 0.0378, 0.0064).unwrap();
        let mut enumerated = Matrix3::zeros();
        for (s, p) in outcome_probabilities(&q0).iter().enumerate() {
            enumerated += score_derivative(&q0, IndicatorVector::from_successes(s)) * *p;
        }
        let closed = expected_score_derivative(&q0);
        let scale = closed.amax();
        assert!((closed - enumerated).amax() / scale < 1e-12);
        let det = closed.determinant();
        let want = expected_score_derivative_determinant(&q0);
        assert!((det / want - 1.0).abs() < 1e-9);
        let inv = closed.try_inverse().unwrap();
        let sigma = crate::estimator::sigma_q(&q0);
        assert!((inv + sigma).amax() < 1e-12);
    }

    #[test]
    fn second_derivative_examples() {
        let t = score_second_derivative(&quarter(), x([0, 0, 0]));
        assert_abs_diff_eq!(t[0][1][2], -128.0, epsilon = 1e-10);
        assert_abs_diff_eq!(t[1][1][0], -128.0, epsilon = 1e-10);
        let q = QParams::new(0.1, 0.3, 0.2).unwrap();
        for s in 0..4 {
            let t = score_second_derivative(&q, IndicatorVector::from_successes(s));
            for slice in &t {
                let m = Matrix3::from_fn(|k, l| slice[k][l]);
                assert_eq!(m, m.transpose());
            }
        }
    }

    #[test]
    fn second_moment_matches_enumeration() {
        let q0 = QParams::new(0.1, 0.3, 0.2).unwrap();
        let e: f64 = outcome_probabilities(&q0)
            .iter()
            .enumerate()
            .map(|(s, p)| p * score_psi(&q0, IndicatorVector::from_successes(s)).norm_squared())
            .sum();
        assert_abs_diff_eq!(e, score_second_moment(&q0), epsilon = 1e-10);
    }

    #[test]
    fn log_likelihood_symmetry_and_corner() {
        let counts = SuccessCounts::new([4, 2, 7, 1]).unwrap();
        let swapped = SuccessCounts::new([4, 7, 2, 1]).unwrap();
        let q = QParams::new(0.2, 0.3, 0.1).unwrap();
        let qs = QParams::new(0.3, 0.2, 0.1).unwrap();
        assert_abs_diff_eq!(
            log_likelihood(&counts, &q).unwrap(),
            log_likelihood(&swapped, &qs).unwrap(),
            epsilon = 1e-14
        );

        // all mass on S = 0: the value is ln(q0) and grows with q0
        let k = SuccessCounts::new([6, 0, 0, 0]).unwrap();
        let mut last = f64::NEG_INFINITY;
        for eps in [0.2, 0.1, 0.01, 0.001] {
            let q = QParams::new(eps, eps, eps).unwrap();
            let ll = log_likelihood(&k, &q).unwrap();
            assert_abs_diff_eq!(ll, (1.0 - 3.0 * eps).ln(), epsilon = 1e-12);
            assert!(ll > last);
            last = ll;
        }
        assert!(log_likelihood(&k, &QParams::new(0.0, 0.5, 0.5).unwrap()).is_err());
    }

    #[test]
    fn bound_psi_examples() {
        let e = bound_psi(0.1, x([0, 0, 0]));
        assert_abs_diff_eq!(e, 3f64.sqrt() * 0.9 / 0.01, epsilon = 1e-10);
        assert_abs_diff_eq!(e, 155.884_572_681_198_9, epsilon = 1e-9);
        let norm = score_psi(&quarter(), x([0, 0, 0])).norm();
        assert_abs_diff_eq!(norm, 3f64.sqrt() * 4.0, epsilon = 1e-12);
        assert!(norm <= e);
        assert!(bound_psi(0.05, x([1, 0, 0])) > bound_psi(0.1, x([1, 0, 0])));
    }

    #[test]
    fn bound_hessian_examples() {
        let g = hessian_diagonal_bounds(0.2, x([1, 0, 0]));
        assert_abs_diff_eq!(g[0], 128_000.0, epsilon = 1e-6);
        assert_abs_diff_eq!(
            hessian_offdiagonal_bound(0.2, x([0, 0, 0])),
            2.0 / 0.008,
            epsilon = 1e-9
        );
        for s in 0..4 {
            let xi = IndicatorVector::from_successes(s);
            let b = bound_hessian(0.1, xi);
            assert!(hessian_diagonal_bounds(0.1, xi).iter().all(|&g| b >= g));
        }
    }

    #[test]
    #[should_panic]
    fn bound_rejects_large_xi() {
        bound_psi(0.4, x([0, 0, 0]));
    }
}
