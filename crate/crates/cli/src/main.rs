//! Command-line driver for the reconstruction pipeline.
//!
//! Subcommands: `simulate` writes phantom/sensitivities/k-space files,
//! `recon` reconstructs from them, `bench` sweeps preconditioners over a
//! size grid, and `flops` emits the arithmetic-cost table. Exit codes:
//! 0 success, 2 configuration error, 3 numerical failure, 4 file error.

mod commands;
mod config;
mod pipeline;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, Overrides};
use sbcs::precond::PrecondKind;

/// Error carrying the process exit code it should terminate with.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    /// Configuration problem (exit code 2).
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    /// Filesystem problem (exit code 4).
    pub fn io(err: std::io::Error) -> Self {
        Self { code: 4, message: err.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<sbcs::Error> for CliError {
    fn from(err: sbcs::Error) -> Self {
        use sbcs::Error::*;
        let code = match &err {
            NonFinite { .. }
            | SingularPreconditioner(_)
            | NonfiniteBreakdown { .. }
            | IndefinitenessDetected { .. }
            | NotPositiveDefinite => 3,
            Io(_) | BadMagic | UnsupportedVersion { .. } | TruncatedPayload { .. } => 4,
            _ => 2,
        };
        Self { code, message: err.to_string() }
    }
}

#[derive(Parser)]
#[command(
    name = "sbcs",
    version,
    about = "Compressed-sensing MRI reconstruction with circulant-preconditioned inner solves"
)]
struct Cli {
    /// JSON config file; command-line flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate phantom, coil maps, mask and undersampled k-space.
    Simulate {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Reconstruct from simulated files.
    Recon {
        #[command(flatten)]
        overrides: Overrides,
        /// Directory holding simulate outputs (defaults to --out).
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Reference CIMG; adds a difference image and a support error line.
        #[arg(long = "ref", value_name = "FILE")]
        reference: Option<PathBuf>,
    },
    /// Run each preconditioner over a grid of sizes and emit CSV tables.
    Bench {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated sizes replacing the configured grid.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Comma-separated preconditioner subset (default: none,jacobi,circulant).
        #[arg(long, value_delimiter = ',')]
        preconds: Vec<String>,
    },
    /// Write the preconditioner/system FLOP table.
    Flops {
        #[command(flatten)]
        overrides: Overrides,
        /// Smallest problem-size exponent (N = 2^exp).
        #[arg(long)]
        min_exp: Option<u32>,
        /// Largest problem-size exponent.
        #[arg(long)]
        max_exp: Option<u32>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate { overrides } => {
            overrides.apply(&mut cfg);
            commands::simulate(&cfg)
        }
        Command::Recon { overrides, data, reference } => {
            overrides.apply(&mut cfg);
            commands::recon(&cfg, data, reference)
        }
        Command::Bench { overrides, sizes, preconds } => {
            overrides.apply(&mut cfg);
            let sizes = if sizes.is_empty() { cfg.bench_sizes.clone() } else { sizes };
            let kinds = parse_preconds(&preconds)?;
            commands::bench(&cfg, &sizes, &kinds)
        }
        Command::Flops { overrides, min_exp, max_exp } => {
            overrides.apply(&mut cfg);
            if let Some(v) = min_exp {
                cfg.flops_min_exp = v;
            }
            if let Some(v) = max_exp {
                cfg.flops_max_exp = v;
            }
            commands::flops(&cfg)
        }
    }
}

/// Missing file is a file error; unparsable JSON is a configuration error.
fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    let Some(path) = path else { return Ok(Config::default()) };
    let text = std::fs::read_to_string(path).map_err(CliError::io)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Parses the preconditioner subset, defaulting to all three.
fn parse_preconds(names: &[String]) -> Result<Vec<PrecondKind>, CliError> {
    if names.is_empty() {
        return Ok(vec![PrecondKind::None, PrecondKind::Jacobi, PrecondKind::Circulant]);
    }
    names.iter().map(|s| s.parse::<PrecondKind>().map_err(CliError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes_follow_the_failure_class() {
        assert_eq!(CliError::from(sbcs::Error::InvalidParams("x".into())).code, 2);
        assert_eq!(CliError::from(sbcs::Error::NonfiniteBreakdown { iteration: 1 }).code, 3);
        assert_eq!(CliError::from(sbcs::Error::BadMagic).code, 4);
        assert_eq!(CliError::config("bad").code, 2);
    }

    #[test]
    fn precond_subset_parses_or_defaults() {
        let all = parse_preconds(&[]).unwrap();
        assert_eq!(all.len(), 3);
        let one = parse_preconds(&["circulant".into()]).unwrap();
        assert_eq!(one, vec![PrecondKind::Circulant]);
        assert!(parse_preconds(&["cholesky".into()]).is_err());
    }

    #[test]
    fn cli_parses_the_documented_flags() {
        let cli = Cli::try_parse_from([
            "sbcs", "recon", "--precond", "jacobi", "--set", "2", "--keep-coils", "6",
            "--out", "run", "--ref", "truth.cimg",
        ])
        .unwrap();
        match cli.command {
            Command::Recon { overrides, reference, .. } => {
                assert_eq!(overrides.precond.as_deref(), Some("jacobi"));
                assert_eq!(overrides.set, Some(2));
                assert_eq!(overrides.keep_coils, Some(6));
                assert_eq!(reference.unwrap(), PathBuf::from("truth.cimg"));
            }
            _ => panic!("expected recon"),
        }
    }
}
