//! Reference values and fixture locations used by the acceptance checks.

use std::path::PathBuf;

/// Success counts (0..3 successes) of the 37-school application.
pub const APPLICATION_COUNTS: [u64; 4] = [1, 3, 11, 22];

/// Published application estimates, rounded to three decimals.
pub struct ApplicationEstimates {
    pub q: [f64; 3],
    pub pi: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub se: [f64; 3],
    pub se_srs: f64,
}

pub const APPLICATION: ApplicationEstimates = ApplicationEstimates {
    q: [0.081, 0.297, 0.595],
    pi: 0.820,
    rho1: 0.146,
    rho2: -0.168,
    se: [0.042, 0.133, 0.262],
    se_srs: 0.036,
};

/// True values of the Monte Carlo study.
pub const STUDY_TRUTH: [f64; 3] = [0.1, 0.1, 0.1];

/// Published Monte Carlo MSEs `(n, [pi, rho1, rho2])` from 1000 replications.
pub const STUDY_MSE: [(u64, [f64; 3]); 4] = [
    (37, [0.0011, 0.0175, 0.0964]),
    (100, [0.0004, 0.0075, 0.0452]),
    (500, [6.96e-5, 0.0014, 0.0093]),
    (1000, [3.43e-5, 0.0007, 0.0045]),
];

/// Category probabilities `(q00, q1, q2, q3)` implied by the study's truth.
pub const STUDY_Q: [f64; 4] = [0.7506, 0.2052, 0.0378, 0.0064];

pub fn fixture(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect()
}
