use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary outcomes, one row of three per triplet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletData {
    rows: Vec<[u8; 3]>,
}

impl TripletData {
    pub fn new(rows: Vec<[u8; 3]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput(
                "at least one triplet is required".into(),
            ));
        }
        if let Some((i, row)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.iter().any(|&v| v > 1))
        {
            return Err(Error::InvalidInput(format!(
                "row {} has a non-binary outcome: {:?}",
                i + 1,
                row
            )));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[[u8; 3]] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }
}

/// Number of triplets with 0, 1, 2 and 3 successes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SuccessCounts {
    counts: [u64; 4],
}

impl SuccessCounts {
    pub fn new(counts: [u64; 4]) -> Result<Self> {
        if counts.iter().sum::<u64>() == 0 {
            return Err(Error::InvalidInput("total count must be positive".into()));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> [u64; 4] {
        self.counts
    }

    pub fn get(&self, successes: usize) -> u64 {
        self.counts[successes]
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// First success count that was never observed.
    pub fn first_void(&self) -> Option<usize> {
        self.counts.iter().position(|&c| c == 0)
    }

    pub fn total_successes(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(s, &c)| s as u64 * c)
            .sum()
    }
}

/// Multinomial category probabilities `(q1, q2, q3)`; `q0` is implied.
///
/// Construction only requires a point of the closed simplex so that
/// estimates with empty categories stay representable. Operations that need
/// the open interior check [`QParams::is_interior`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QParams {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

const SIMPLEX_SLACK: f64 = 1e-12;

impl QParams {
    pub fn new(q1: f64, q2: f64, q3: f64) -> Result<Self> {
        let q = Self { q1, q2, q3 };
        let all = q.with_q0();
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite q: {all:?}")));
        }
        if all
            .iter()
            .any(|&v| !(-SIMPLEX_SLACK..=1.0 + SIMPLEX_SLACK).contains(&v))
        {
            return Err(Error::InvalidInput(format!(
                "q outside the probability simplex: {all:?}"
            )));
        }
        Ok(q)
    }

    /// Like [`QParams::new`] but additionally requires every category,
    /// including `q0`, to be strictly inside `(0, 1)`.
    pub fn interior(q1: f64, q2: f64, q3: f64) -> Result<Self> {
        let q = Self::new(q1, q2, q3)?;
        if !q.is_interior() {
            return Err(Error::InvalidInput(format!(
                "q not in the open simplex interior: {:?}",
                q.with_q0()
            )));
        }
        Ok(q)
    }

    pub fn from_array(q: [f64; 3]) -> Result<Self> {
        Self::new(q[0], q[1], q[2])
    }

    pub fn q0(&self) -> f64 {
        1.0 - self.q1 - self.q2 - self.q3
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.q1, self.q2, self.q3]
    }

    /// `(q0, q1, q2, q3)`.
    pub fn with_q0(&self) -> [f64; 4] {
        [self.q0(), self.q1, self.q2, self.q3]
    }

    pub fn is_interior(&self) -> bool {
        self.with_q0().iter().all(|&v| v > 0.0 && v < 1.0)
    }

    /// Membership in the box `[xi, 1 - xi]^3` with `q0 >= xi`.
    pub fn in_box(&self, xi: f64) -> bool {
        self.with_q0().iter().all(|&v| v >= xi && v <= 1.0 - xi)
    }

    /// Probabilities of an independent triplet with success probability `pi`.
    pub fn independent(pi: f64) -> Result<Self> {
        let f = 1.0 - pi;
        Self::new(3.0 * pi * f * f, 3.0 * pi * pi * f, pi * pi * pi)
    }

    pub(crate) fn unchecked(q: [f64; 3]) -> Self {
        Self {
            q1: q[0],
            q2: q[1],
            q3: q[2],
        }
    }
}

/// Proportion and first- and second-order intra-triplet correlations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoParams {
    pub pi: f64,
    pub rho1: f64,
    pub rho2: f64,
}

impl RhoParams {
    /// Checks `0 < pi < 1` and finiteness. Admissibility of the correlations
    /// is decided by [`crate::estimator::rho_to_q`].
    pub fn new(pi: f64, rho1: f64, rho2: f64) -> Result<Self> {
        if !(pi.is_finite() && rho1.is_finite() && rho2.is_finite()) {
            return Err(Error::InvalidInput("non-finite rho parameters".into()));
        }
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::DegenerateProportion { pi });
        }
        Ok(Self { pi, rho1, rho2 })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.pi, self.rho1, self.rho2]
    }
}

/// Mutually exclusive indicators `(1{S=1}, 1{S=2}, 1{S=3})` of one triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndicatorVector([u8; 3]);

impl IndicatorVector {
    /// The four possible outcomes, indexed by the success count.
    pub const OUTCOMES: [IndicatorVector; 4] = [
        IndicatorVector([0, 0, 0]),
        IndicatorVector([1, 0, 0]),
        IndicatorVector([0, 1, 0]),
        IndicatorVector([0, 0, 1]),
    ];

    pub fn new(x: [u8; 3]) -> Result<Self> {
        let sum: u32 = x.iter().map(|&v| v as u32).sum();
        if x.iter().any(|&v| v > 1) || sum > 1 {
            return Err(Error::InvalidInput(format!(
                "indicators must be exclusive 0/1 values: {x:?}"
            )));
        }
        Ok(Self(x))
    }

    pub fn from_successes(s: usize) -> Self {
        Self::OUTCOMES[s]
    }

    pub fn as_f64(&self) -> [f64; 3] {
        [self.0[0] as f64, self.0[1] as f64, self.0[2] as f64]
    }

    pub fn sum(&self) -> f64 {
        self.as_f64().iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_data_rejects_non_binary_and_empty() {
        assert!(TripletData::new(vec![]).is_err());
        assert!(TripletData::new(vec![[1, 2, 0]]).is_err());
        assert_eq!(TripletData::new(vec![[1, 0, 1]]).unwrap().n(), 1);
    }

    #[test]
    fn qparams_validation() {
        assert!(QParams::new(0.5, 0.4, 0.2).is_err());
        assert!(QParams::new(-0.1, 0.4, 0.2).is_err());
        assert!(QParams::new(f64::NAN, 0.4, 0.2).is_err());
        let q = QParams::new(0.0, 0.5, 0.5).unwrap();
        assert!(!q.is_interior());
        assert!(QParams::interior(0.0, 0.5, 0.5).is_err());
        let q = QParams::interior(0.25, 0.25, 0.25).unwrap();
        assert!((q.q0() - 0.25).abs() < 1e-15);
        assert!(q.in_box(0.1));
        assert!(!q.in_box(0.3));
    }

    #[test]
    fn indicator_vector_exclusive() {
        assert!(IndicatorVector::new([1, 1, 0]).is_err());
        assert!(IndicatorVector::new([0, 2, 0]).is_err());
        assert_eq!(IndicatorVector::new([0, 1, 0]).unwrap().sum(), 1.0);
        assert_eq!(IndicatorVector::from_successes(0).sum(), 0.0);
    }

    #[test]
    fn counts_helpers() {
        let c = SuccessCounts::new([1, 3, 11, 22]).unwrap();
        assert_eq!(c.n(), 37);
        assert_eq!(c.total_successes(), 91);
        assert_eq!(c.first_void(), None);
        assert_eq!(
            SuccessCounts::new([5, 0, 0, 0]).unwrap().first_void(),
            Some(1)
        );
        assert!(SuccessCounts::new([0, 0, 0, 0]).is_err());
    }
}
