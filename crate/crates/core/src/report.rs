//! Report documents and their text and JSON renderings.
//!
//! JSON carries every number at full precision; text output is a 3-decimal
//! formatting of the same values.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticReport;
use crate::error::{Error, Result};
use crate::estimator::EstimationReport;
use crate::simulation::{BootstrapResult, MseResult};

pub const TOOL_NAME: &str = "triplets";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub input: Option<String>,
    pub n: u64,
    /// Seed used for subsampling or simulation, if any randomness was used.
    pub seed: Option<u64>,
    pub level: Option<f64>,
    pub clustered: bool,
}

impl Metadata {
    pub fn new(n: u64) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            input: None,
            n,
            seed: None,
            level: None,
            clustered: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub metadata: Metadata,
    pub result: T,
}

pub type ReportDocument = Document<EstimationReport>;
pub type SimulationDocument = Document<MseResult>;
pub type BootstrapDocument = Document<BootstrapResult>;

impl<T: Serialize> Document<T> {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

impl<T: for<'de> Deserialize<'de>> Document<T> {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

const NAMES: [&str; 3] = ["pi", "rho1", "rho2"];

fn sci(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
    }
}

pub fn render_estimate(doc: &ReportDocument) -> String {
    let r = &doc.result;
    let m = &doc.metadata;
    let c = r.counts.counts();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Triplet estimate: n = {} triplets ({} outcomes), {:.0}% Wald intervals",
        m.n,
        3 * m.n,
        100.0 * r.level
    );
    if let Some(input) = &m.input {
        let _ = writeln!(out, "input: {input}");
    }
    if m.clustered {
        if let Some(seed) = m.seed {
            let _ = writeln!(out, "subsampled 3 outcomes per cluster, seed {seed}");
        }
    }
    let _ = writeln!(
        out,
        "counts by successes 0..3: {} {} {} {}",
        c[0], c[1], c[2], c[3]
    );
    if r.void_categories {
        let _ = writeln!(out, "warning: empty category, standard errors unreliable");
    }
    let _ = writeln!(
        out,
        "q1 = {:.3}   q2 = {:.3}   q3 = {:.3}",
        r.q_hat.q1, r.q_hat.q2, r.q_hat.q3
    );
    let est = r.rho_hat.as_array();
    for j in 0..3 {
        let ci = &r.ci[j];
        let _ = writeln!(
            out,
            "{:<5} = {:>6.3} ± {:.3}   [{:.3}, {:.3}]{}",
            NAMES[j],
            est[j],
            r.cov.se[j],
            ci.lower,
            ci.upper,
            if ci.truncated { " (truncated)" } else { "" }
        );
    }
    let _ = writeln!(
        out,
        "srs   = {:>6.3} ± {:.3}   (outcomes treated as independent)",
        est[0], r.srs_se
    );
    let _ = writeln!(out, "design effect (SE ratio) = {:.3}", r.design_effect);
    out
}

pub fn render_simulation(doc: &SimulationDocument) -> String {
    let r = &doc.result;
    let cfg = &r.config;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Monte Carlo MSE: pi = {}, rho1 = {}, rho2 = {}, n = {}, reps = {}, seed = {}",
        cfg.rho0.pi, cfg.rho0.rho1, cfg.rho0.rho2, cfg.n, cfg.reps, cfg.seed
    );
    let _ = writeln!(
        out,
        "q0 = ({:.4}, {:.4}, {:.4}), q00 = {:.4}",
        r.q0.q1,
        r.q0.q2,
        r.q0.q3,
        r.q0.q0()
    );
    let _ = writeln!(out, "{:<6}{:>12}{:>12}", "", "MSE", "bias");
    for ((name, mse), bias) in NAMES.iter().zip(r.mse).zip(r.bias) {
        let _ = writeln!(out, "{name:<6}{:>12}{:>12}", sci(mse), sci(bias));
    }
    let _ = writeln!(
        out,
        "skipped {} (degenerate pi_hat), {} with an empty category",
        r.skipped, r.void_replications
    );
    out
}

pub fn render_bootstrap(doc: &BootstrapDocument) -> String {
    let r = &doc.result;
    let est = r.estimate.as_array();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Parametric bootstrap: n = {}, reps = {}, seed = {}, {:.0}% percentile intervals",
        r.counts.n(),
        r.reps,
        r.seed,
        100.0 * r.level
    );
    for j in 0..3 {
        let _ = writeln!(
            out,
            "{:<5} = {:>6.3} ± {:.3}   [{:.3}, {:.3}]",
            NAMES[j], est[j], r.se[j], r.ci[j].lower, r.ci[j].upper
        );
    }
    let _ = writeln!(
        out,
        "skipped {} (degenerate pi_hat), {} with an empty category",
        r.skipped, r.void_replicates
    );
    out
}

pub fn render_diagnostics(report: &DiagnosticReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Diagnostics: xi = {}, seed = {}",
        report.config.xi, report.config.seed
    );
    for c in &report.checks {
        let _ = writeln!(
            out,
            "{} {:<34} n={:<6} worst={:<10.3e} tol={:.0e}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.evaluated,
            c.worst,
            c.tolerance
        );
    }
    let _ = writeln!(
        out,
        "{}",
        if report.passed() {
            "all checks passed"
        } else {
            "violations found"
        }
    );
    out
}
