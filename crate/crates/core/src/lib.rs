//! Maximum-likelihood estimation of a proportion from a sample of triplets.
//!
//! Each observation is a cluster of three exchangeable binary outcomes. The
//! number of successes per triplet is multinomial over `{0, 1, 2, 3}` with
//! probabilities `q = (q1, q2, q3)` (and `q0 = 1 - q1 - q2 - q3`). The
//! Bahadur map [`estimator::phi`] turns `q` into the proportion `pi` and the
//! first- and second-order intra-triplet correlations `rho1`, `rho2`.
//!
//! Modules:
//! - [`estimator`]: closed-form estimates, the Bahadur map and its inverse,
//!   delta-method covariance, Wald intervals and the srs comparison.
//! - [`score`]: score function, its derivatives, expectations and the uniform
//!   bounds, usable as runtime oracles.
//! - [`simulation`]: seeded multinomial sampling, Monte Carlo MSE studies and
//!   the parametric bootstrap.
//! - [`ingest`]: CSV readers and per-cluster subsampling.
//! - [`report`]: serializable report document and text rendering.

pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod ingest;
pub mod report;
pub mod score;
pub mod simulation;
pub mod types;

pub use error::{Error, Result};
pub use types::{IndicatorVector, QParams, RhoParams, SuccessCounts, TripletData};

/// Default lower edge of the parameter box `[xi, 1 - xi]^3` used by the
/// bound checks and input validation.
pub const DEFAULT_XI: f64 = 1e-6;
