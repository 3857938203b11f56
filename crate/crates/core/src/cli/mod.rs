//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failed, 2 input error,
//! 3 precondition error, 4 enumeration cap exceeded.

mod commands;
pub mod format;

use std::ffi::OsString;
use std::fmt;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::params::ChainStrengthPolicy;
use crate::solve::{DEFAULT_MAX_SPINS, DEFAULT_TOLERANCE};
use crate::wmis::PenaltyRule;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_CAP: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PRECONDITION,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::EnumerationCap { .. } => EXIT_CAP,
            Error::NegativeSlack(_) | Error::NotChainEmbedding | Error::EmbedFailed { .. } => {
                EXIT_PRECONDITION
            }
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::input(format!("i/o error: {e}"))
    }
}

/// Accepts decimals and simple fractions such as `1/16`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad number '{s}'"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad number '{s}'"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("bad number '{s}'"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("number '{s}' is not finite"))
    }
}

/// Chain-strength choice on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyArg {
    Standard(ChainStrengthPolicy),
    /// Gap target shared by every vertex; expanded once `n` is known.
    Gap(Vec<f64>),
    /// Leaf-uniform split with this chain strength on every tree edge.
    Fixed(f64),
}

impl PolicyArg {
    pub fn resolve(&self, n: usize) -> Result<ChainStrengthPolicy, CliError> {
        match self {
            PolicyArg::Standard(p) => Ok(p.clone()),
            PolicyArg::Gap(g) if g.len() == 1 => Ok(ChainStrengthPolicy::GapTargeted {
                gaps: vec![g[0]; n],
            }),
            PolicyArg::Gap(g) if g.len() == n => {
                Ok(ChainStrengthPolicy::GapTargeted { gaps: g.clone() })
            }
            PolicyArg::Gap(g) => Err(CliError::input(format!(
                "gap policy lists {} targets for {n} vertices",
                g.len()
            ))),
            PolicyArg::Fixed(_) => Err(CliError::input("fixed policy has no standard form")),
        }
    }
}

pub fn parse_policy(s: &str) -> Result<PolicyArg, String> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let margin = || arg.map(parse_number).transpose();
    match name {
        "easy" => Ok(PolicyArg::Standard(ChainStrengthPolicy::Easy {
            margin: margin()?,
        })),
        "tight" => Ok(PolicyArg::Standard(ChainStrengthPolicy::Tight {
            margin: margin()?,
        })),
        "gap" => {
            let list = arg.ok_or("gap policy needs targets, e.g. gap:1/4")?;
            let gaps = list
                .split(',')
                .map(parse_number)
                .collect::<Result<_, _>>()?;
            Ok(PolicyArg::Gap(gaps))
        }
        "fixed" => {
            let f = parse_number(arg.ok_or("fixed policy needs a strength, e.g. fixed:-1")?)?;
            if f >= 0.0 {
                return Err(format!("chain strength must be negative, got {f}"));
            }
            Ok(PolicyArg::Fixed(f))
        }
        _ => Err(format!(
            "unknown policy '{s}' (expected easy[:M], tight[:M], gap:G or fixed:F)"
        )),
    }
}

pub fn parse_penalty(s: &str) -> Result<PenaltyRule, String> {
    match s.split_once(':') {
        Some(("strict", d)) => Ok(PenaltyRule::StrictMinPlus(parse_number(d)?)),
        Some(("uniform", j)) => Ok(PenaltyRule::Uniform(parse_number(j)?)),
        _ => Err(format!(
            "unknown penalty '{s}' (expected strict:DELTA or uniform:J)"
        )),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "minor-embed",
    version,
    about = "Embed, parameterize and verify Ising problems on hardware graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KindArg {
    Square,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TargetArg {
    Ising,
    Qubo,
}

#[derive(Debug, Args)]
pub struct HardwareArgs {
    /// Hardware block file (as written by gen-hardware).
    #[arg(long, conflicts_with_all = ["kind", "rows", "cols"])]
    pub hardware: Option<PathBuf>,
    #[arg(long, value_enum, requires_all = ["rows", "cols"])]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Largest number of spins enumerated.
    #[arg(long = "max-n", default_value_t = DEFAULT_MAX_SPINS)]
    pub max_n: usize,
    /// Energies closer than this are one level.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE, value_parser = parse_number)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a square or extended (king's move) grid.
    GenHardware {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert between ising and qubo (wmis converts to either).
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        to: TargetArg,
        #[arg(long)]
        out: PathBuf,
        /// wmis penalty: strict:DELTA or uniform:J (default strict with
        /// DELTA = min weight / 4).
        #[arg(long, value_parser = parse_penalty)]
        penalty: Option<PenaltyRule>,
    },
    /// Check an embedding file.
    Validate {
        #[arg(long)]
        embedding: PathBuf,
        /// Problem whose graph is embedded (otherwise implied by the
        /// embedding's edge assignment).
        #[arg(long)]
        problem: Option<PathBuf>,
    },
    /// Find a chain embedding greedily.
    Embed {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        hardware: HardwareArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = crate::embedding::GREEDY_ATTEMPTS)]
        attempts: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Set embedded biases and chain strengths.
    SetParams {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        /// easy[:MARGIN], tight[:MARGIN], gap:G[,G...] or fixed:F.
        #[arg(long, default_value = "tight", value_parser = parse_policy)]
        policy: PolicyArg,
        /// Fix vertices with negative slack before embedding.
        #[arg(long)]
        preprocess: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustively solve a problem.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Ground states printed.
        #[arg(long, default_value_t = 8)]
        show: usize,
        /// wmis penalty (see convert).
        #[arg(long, value_parser = parse_penalty)]
        penalty: Option<PenaltyRule>,
    },
    /// Check ground-state correspondence between a problem and its embedding.
    Verify {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        embedded: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// wmis/qubo/ising → ising → embed → set-params → verify → decode.
    Pipeline {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_parser = parse_penalty)]
        penalty: Option<PenaltyRule>,
        /// Embedding file; otherwise a greedy chain embedding is used.
        #[arg(long, conflicts_with_all = ["hardware", "kind"])]
        embedding: Option<PathBuf>,
        #[command(flatten)]
        hardware: HardwareArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "tight", value_parser = parse_policy)]
        policy: PolicyArg,
        #[command(flatten)]
        solve: SolveArgs,
        /// Where to write the embedded problem.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match commands::dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code
        }
    }
}

pub fn main() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
