//! Library half of the `lorentz` command-line tool.
//!
//! [`Cli`] is the argument grammar; [`execute`] runs one command and
//! returns its rendered outputs without touching the filesystem except to
//! read inputs, so the same code path serves the binary and the tests.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lorentz_core::Exponent;

pub mod commands;
pub mod format;
pub mod svg;

pub use commands::{execute, Outcome};
pub use format::{Document, Format};

/// Process exit status for each failure class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 2,
    Validation = 3,
    Construction = 4,
    Io = 5,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self::new(ExitKind::Io, format!("{}: {err}", path.display()))
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<lorentz_core::Error> for CliError {
    fn from(e: lorentz_core::Error) -> Self {
        use lorentz_core::Error as E;
        let kind = match &e {
            E::Domain(_) | E::Budget(_) => ExitKind::Usage,
            E::Validation(_) => ExitKind::Validation,
            E::Construction { .. } => ExitKind::Construction,
        };
        Self::new(kind, e.to_string())
    }
}

/// Parses an exponent; `inf` (or `∞`) means infinity.
pub fn parse_exponent(s: &str) -> Result<Exponent, String> {
    match s.trim() {
        "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
        t => {
            let v: f64 = t.parse().map_err(|_| format!("not a number or inf: {t:?}"))?;
            Exponent::new(v).map_err(|e| e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lorentz", version, about = "Lorentz sequence-space norms, Khintchine witnesses, Bernstein widths and the gliding-hump demo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quasi-norm of a sequence read from a JSON array.
    Norm(NormArgs),
    /// Minimized norm ratio on the Rademacher subspaces with the empirical α.
    Bernstein(BernsteinArgs),
    /// Growth of ‖z_N‖ in ℓ_{p,q} against its boundedness in ℓ_{p,r}.
    DemoGrowth(GrowthArgs),
    /// Empirical Khintchine constants for L^{p,q}(0,1).
    Khintchine(KhintchineArgs),
    /// Sequence norm against the scaled dyadic step-function norm.
    TransferCheck(TransferArgs),
    /// Decreasing rearrangement and the rearrangement on the support.
    Rearrange(RearrangeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct NormArgs {
    /// JSON array of reals.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_exponent)]
    pub q: Exponent,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BernsteinArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_exponent, default_value = "1")]
    pub q: Exponent,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_exponent, default_value = "inf")]
    pub r: Exponent,
    #[arg(long = "n-max", default_value_t = 8)]
    pub n_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    /// Also write a plot of value against n.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GrowthSource {
    /// Normalized dyadic flat blocks, evaluated in log space.
    Chain,
    /// A full gliding-hump build on dyadic flat blocks.
    Construction,
}

#[derive(Debug, Clone, Args)]
pub struct GrowthArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_exponent, default_value = "2")]
    pub r: Exponent,
    #[arg(long = "N-max", default_value_t = 4096)]
    pub n_max: usize,
    /// Smallest N used in the ln N fit.
    #[arg(long, default_value_t = 16)]
    pub fit_from: usize,
    #[arg(long, value_enum, default_value_t = GrowthSource::Chain)]
    pub source: GrowthSource,
    /// δ for the construction; 1/(4T) when absent.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Decay exponent γ of the reference sequence; 2/q when absent.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Write the construction state as JSON.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct KhintchineArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_exponent, default_value = "2")]
    pub q: Exponent,
    /// Number of Rademacher functions.
    #[arg(long = "n-max", default_value_t = 8)]
    pub n_max: usize,
    #[arg(long, default_value = "exhaustive-signs")]
    pub method: lorentz_core::rademacher::KhintchineMethod,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TransferArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_exponent)]
    pub q: Exponent,
    /// JSON array to check; random sequences when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Dyadic level for --input; the smallest level that fits when absent.
    #[arg(long)]
    pub level: Option<u32>,
    /// Largest level for random sequences.
    #[arg(long = "n-max", default_value_t = 10)]
    pub n_max: u32,
    /// Number of random sequences.
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RearrangeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}
