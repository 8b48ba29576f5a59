//! Command-line front end for the `triplets` tool.
//!
//! [`run`] parses arguments, executes one subcommand and returns the exit
//! code, writing to the given streams so it can be driven in-process.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use triplet_core::diagnostics::{run_diagnostics, DiagnosticsConfig};
use triplet_core::estimator::{count_successes, estimate, EstimateOptions};
use triplet_core::ingest::{read_cluster_csv, read_triplet_csv, subsample_clusters};
use triplet_core::report::{
    render_bootstrap, render_diagnostics, render_estimate, render_simulation, Document, Metadata,
};
use triplet_core::simulation::{
    parametric_bootstrap, run_mse_study, SimConfig, DEFAULT_BOOTSTRAP_REPS,
};
use triplet_core::{Error, RhoParams};

pub const EXIT_SUCCESS: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "triplets", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the proportion and intra-triplet correlations from a CSV file.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Input is `cluster_id,outcome`; three outcomes are drawn per cluster.
        #[arg(long)]
        clustered: bool,
        /// Subsampling seed (clustered input only).
        #[arg(long, env = "TRIPLETS_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
        level: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Report estimates even when a success count was never observed.
        #[arg(long)]
        force_void: bool,
    },
    /// Monte Carlo mean squared errors of the estimators at given true values.
    Simulate {
        #[arg(long)]
        pi: f64,
        #[arg(long, allow_hyphen_values = true)]
        rho1: f64,
        #[arg(long, allow_hyphen_values = true)]
        rho2: f64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 1000, value_parser = parse_positive)]
        reps: usize,
        #[arg(long, env = "TRIPLETS_SEED")]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Parametric bootstrap standard errors and percentile intervals.
    Bootstrap {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_REPS)]
        reps: usize,
        #[arg(long, env = "TRIPLETS_SEED")]
        seed: u64,
        #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
        level: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check the score bounds and numerical identities.
    Diagnose {
        #[arg(long, default_value_t = 0.1, value_parser = parse_xi)]
        xi: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("level must lie in (0, 1)".into())
    }
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        Ok(_) => Err("must be at least 1".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_xi(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 0.25 {
        Ok(v)
    } else {
        Err("xi must lie in (0, 0.25)".into())
    }
}

enum Failure {
    Usage(String),
    Data(Error),
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MinReps { .. } => Failure::Usage(e.to_string()),
            e => Failure::Data(e),
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::Data(e.into())
}

fn emit<T: serde::Serialize>(
    out: &mut dyn Write,
    format: Format,
    doc: &Document<T>,
    text: impl Fn(&Document<T>) -> String,
) -> Result<(), Failure> {
    match format {
        Format::Text => write!(out, "{}", text(doc)),
        Format::Json => writeln!(out, "{}", doc.to_json()?),
    }
    .map_err(io_failure)
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Estimate {
            input,
            clustered,
            seed,
            level,
            format,
            force_void,
        } => {
            let data = if clustered {
                let seed = seed.ok_or_else(|| {
                    Failure::Usage("--clustered requires --seed or TRIPLETS_SEED".into())
                })?;
                subsample_clusters(&read_cluster_csv(&input)?, seed)?
            } else {
                read_triplet_csv(&input)?
            };
            let counts = count_successes(&data);
            let opts = EstimateOptions {
                level,
                force_void,
                ..Default::default()
            };
            let result = estimate(&counts, &opts)?;
            let mut metadata = Metadata::new(counts.n());
            metadata.input = Some(input.display().to_string());
            metadata.level = Some(level);
            metadata.clustered = clustered;
            metadata.seed = if clustered { seed } else { None };
            emit(out, format, &Document { metadata, result }, render_estimate)
        }
        Command::Simulate {
            pi,
            rho1,
            rho2,
            n,
            reps,
            seed,
            format,
        } => {
            let config = SimConfig {
                rho0: RhoParams::new(pi, rho1, rho2)?,
                n,
                reps,
                seed,
            };
            let result = run_mse_study(&config)?;
            let mut metadata = Metadata::new(n);
            metadata.seed = Some(seed);
            emit(
                out,
                format,
                &Document { metadata, result },
                render_simulation,
            )
        }
        Command::Bootstrap {
            input,
            reps,
            seed,
            level,
            format,
        } => {
            let counts = count_successes(&read_triplet_csv(&input)?);
            let result = parametric_bootstrap(&counts, reps, seed, level)?;
            let mut metadata = Metadata::new(counts.n());
            metadata.input = Some(input.display().to_string());
            metadata.seed = Some(seed);
            metadata.level = Some(level);
            emit(
                out,
                format,
                &Document { metadata, result },
                render_bootstrap,
            )
        }
        Command::Diagnose { xi, format } => {
            let report = run_diagnostics(&DiagnosticsConfig {
                xi,
                ..Default::default()
            })?;
            match format {
                Format::Text => write!(out, "{}", render_diagnostics(&report)),
                Format::Json => writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&report)
                        .map_err(|e| Failure::Data(Error::InvalidInput(e.to_string())))?
                ),
            }
            .map_err(io_failure)?;
            if report.passed() {
                Ok(())
            } else {
                let failed: Vec<_> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed())
                    .map(|c| c.name.as_str())
                    .collect();
                Err(Failure::Violation(failed.join(", ")))
            }
        }
    }
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{rendered}");
                EXIT_SUCCESS
            };
        }
    };
    let (code, message) = match execute(cli.command, out) {
        Ok(()) => return EXIT_SUCCESS,
        Err(Failure::Usage(msg)) => (EXIT_USAGE, format!("error: {msg}")),
        Err(Failure::Data(e)) => (EXIT_DATA, format!("error: {e}")),
        Err(Failure::Violation(names)) => {
            (EXIT_VIOLATION, format!("diagnostic violations: {names}"))
        }
    };
    let _ = writeln!(err, "{message}");
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (u8, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("triplets").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn value_parsers_reject_out_of_range() {
        assert_eq!(parse_level("0.9"), Ok(0.9));
        assert!(parse_level("1").is_err());
        assert!(parse_level("abc").is_err());
        assert!(parse_xi("0.25").is_err());
        assert_eq!(parse_xi("0.2"), Ok(0.2));
        assert!(parse_positive("0").is_err());
    }

    #[test]
    fn help_goes_to_stdout_and_errors_to_stderr() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, EXIT_SUCCESS);
        assert!(out.contains("simulate"));
        let (code, out, err) = run_args(&["simulate", "--pi", "0.1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
        assert!(err.contains("--rho1"));
    }

    #[test]
    fn negative_correlations_parse() {
        let (code, out, err) = run_args(&[
            "simulate", "--pi", "0.5", "--rho1", "-0.2", "--rho2", "-0.1", "--n", "50", "--reps",
            "20", "--seed", "3",
        ]);
        assert_eq!(code, EXIT_SUCCESS, "{err}");
        assert!(out.contains("rho1 = -0.2"));
    }
}
