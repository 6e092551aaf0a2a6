//! Commands behind the `mwxe` binary.
//!
//! Every command writes its report to one writer as `KEY=VALUE` lines (lines
//! starting with `#` are layout only) and sends timing and warnings to a
//! second writer, so reports are byte-identical between runs.

use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use mwxe_core::matrix::{format::FormatError, BuildSpec, MatrixError, ZeroRule};
use mwxe_core::oracle::OracleError;
use mwxe_core::series::SeriesError;
use mwxe_core::specfun::default_lambda0;
use mwxe_core::{Tolerances, WaveletIndex};
use thiserror::Error;

pub mod commands;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandKind {
    /// Build one matrix file per level.
    Build,
    /// Print sparsity counts of a matrix file.
    Stats,
    /// Compare sampled elements against the quadrature oracle.
    Validate,
    /// Compare multipole and direct potentials of a random block.
    Potential,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "mwxe", version, about = "Multiwavelet to multipole conversion matrices for e^{-λr}/r")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: CommandKind,
    /// Decay rate λ of the kernel.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Bessel scaling λ0; defaults to λ, or 1 when λ = 0.
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Number of levels N; matrices are built for n = 0..N-1.
    #[arg(long, default_value_t = 1)]
    pub levels: u32,
    #[arg(long = "pmax", default_value_t = 10)]
    pub p_max: u32,
    #[arg(long = "kmax", default_value_t = 10)]
    pub k_max: u32,
    /// Absolute tolerance; 1e-16, except 1e-300 for `potential`.
    #[arg(long = "eps-a")]
    pub eps_a: Option<f64>,
    #[arg(long = "eps-r", default_value_t = 1e-16)]
    pub eps_r: f64,
    /// Output directory for matrix files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Input matrix file.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of elements sampled by `validate`.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Which elements are dropped as effective zeros: `magnitude`,
    /// `leading-term` (the moment-condition estimate) or `keep`. Defaults
    /// to `magnitude`, except `keep` for `potential`.
    #[arg(long = "zero-rule")]
    pub zero_rule: Option<ZeroRule>,
    /// Oracle cell budget per element in `validate`.
    #[arg(long = "max-cells", default_value_t = 64)]
    pub max_cells: usize,
}

impl RunConfig {
    /// Parses `args` (without the program name) with all other flags at
    /// their defaults.
    pub fn from_args<I, S>(args: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = S>,
        S: Into<std::ffi::OsString> + Clone,
    {
        RunConfig::try_parse_from(std::iter::once("mwxe".into()).chain(args.into_iter().map(Into::into)))
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0.unwrap_or_else(|| default_lambda0(self.lambda))
    }

    /// `ε_a` after command defaults. The expansion check in `potential`
    /// needs every entry to full relative accuracy: entries carry
    /// `λ0^{-p}`, so an absolute tolerance truncates the high-degree rows.
    pub fn eps_a(&self) -> f64 {
        self.eps_a.unwrap_or(match self.command {
            CommandKind::Potential => 1e-300,
            _ => Tolerances::default().eps_a,
        })
    }

    pub fn zero_rule(&self) -> ZeroRule {
        self.zero_rule.unwrap_or(match self.command {
            CommandKind::Potential => ZeroRule::Keep,
            _ => ZeroRule::Magnitude,
        })
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            eps_a: self.eps_a(),
            eps_r: self.eps_r,
            ..Tolerances::default()
        }
    }

    pub fn build_spec(&self, level: u32) -> BuildSpec {
        BuildSpec::new(self.lambda, self.p_max, self.k_max)
            .at_level(level)
            .with_lambda0(self.lambda0())
            .with_tolerances(self.tolerances())
            .with_zero_rule(self.zero_rule())
    }

    pub fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.levels < 1 {
            return bad("--levels must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("--lambda must be finite and >= 0, got {}", self.lambda));
        }
        let l0 = self.lambda0();
        if !(l0 > 0.0 && l0.is_finite()) {
            return bad(format!("--lambda0 must be finite and > 0, got {l0}"));
        }
        self.tolerances()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        match self.command {
            CommandKind::Stats if self.input.is_none() => bad("stats needs --in".into()),
            CommandKind::Potential if self.lambda <= 0.0 => bad("potential needs --lambda > 0".into()),
            CommandKind::Validate if self.max_cells < 8 => bad("--max-cells must be at least 8".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("series did not converge at level {level}: p={p} q={q} k=({}, {}, {}) after {terms} terms", k.kx, k.ky, k.kz)]
    NonConvergence {
        level: u32,
        p: u32,
        q: i32,
        k: WaveletIndex,
        terms: u32,
    },
    #[error(transparent)]
    Matrix(MatrixError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("writing report: {0}")]
    Report(#[from] io::Error),
}

impl CliError {
    /// Process exit code: 2 for non-convergence, 3 for everything that
    /// prevented a run (configuration, I/O, parsing).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NonConvergence { .. } => 2,
            _ => 3,
        }
    }

    fn series(level: u32, e: SeriesError) -> Self {
        match e {
            SeriesError::NonConvergence { p, q, k, terms, .. } => CliError::NonConvergence {
                level,
                p,
                q,
                k,
                terms,
            },
            other => CliError::Matrix(MatrixError::Series { level, source: other }),
        }
    }
}

impl From<MatrixError> for CliError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::Series { level, source } => CliError::series(level, source),
            other => CliError::Matrix(other),
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ValidationFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ValidationFailed => 1,
        }
    }
}

/// Runs the configured command.
pub fn run(config: &RunConfig, out: &mut dyn Write, log: &mut dyn Write) -> Result<Outcome, CliError> {
    config.check()?;
    let outcome = match config.command {
        CommandKind::Build => commands::build(config, out, log)?,
        CommandKind::Stats => commands::stats(config, out)?,
        CommandKind::Validate => commands::validate(config, out, log)?,
        CommandKind::Potential => commands::potential(config, out, log)?,
    };
    out.flush()?;
    Ok(outcome)
}

/// Runs and maps the result to an exit code, reporting errors on `log`.
pub fn run_to_exit_code(config: &RunConfig, out: &mut dyn Write, log: &mut dyn Write) -> i32 {
    match run(config, out, log) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            let _ = writeln!(log, "error: {e}");
            e.exit_code()
        }
    }
}
