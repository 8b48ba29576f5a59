use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("void category: no triplet with {successes} successes (counts {counts:?})")]
    VoidCategory { successes: usize, counts: [u64; 4] },

    #[error("degenerate proportion: pi = {pi}, correlations are undefined")]
    DegenerateProportion { pi: f64 },

    #[error("inadmissible parameters (pi={pi}, rho1={rho1}, rho2={rho2}): implied q = {q:?}")]
    Inadmissible {
        pi: f64,
        rho1: f64,
        rho2: f64,
        q: [f64; 4],
    },

    #[error("non-finite variance in delta-method covariance")]
    NonFiniteVariance,

    #[error("srs standard error is zero, design effect undefined")]
    ZeroBaseline,

    #[error("all {reps} replications were skipped")]
    AllSkipped { reps: usize },

    #[error("too many skipped replicates: {skipped} of {reps}")]
    TooManySkipped { skipped: usize, reps: usize },

    #[error("at least {min} replicates required, got {got}")]
    MinReps { min: usize, got: usize },

    #[error("empty file: {0}")]
    EmptyFile(String),

    #[error("parse error at row {row}: {message} (token {token:?})")]
    Parse {
        row: usize,
        token: String,
        message: String,
    },

    #[error("clusters with fewer than 3 outcomes: {0:?}")]
    ClusterTooSmall(Vec<String>),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
