//! `mirlab`: batch front end for validation, evaluation, sweeps and reports.
//!
//! CSV outputs start with a `# manifest <sha256>` comment line. The hash
//! covers everything that determines the body (instance content, subcommand,
//! flags, seed, tool version) and nothing that does not (timestamps, output
//! path, thread count).

mod commands;
mod manifest;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use manifest::RunManifest;
pub use report::{summarize, Summary};

#[derive(Debug, Parser)]
#[command(name = "mirlab", version, about = "Convex approximations of two-stage mixed-integer recourse models")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Base seed of every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo sample size.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub n: usize,
    /// Grid points per axis for the period means Γ.
    #[arg(long = "gamma-res", global = true, default_value_t = 1024)]
    pub gamma_res: usize,
    /// CSV destination (stdout when absent); a manifest is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads. Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check complete and sufficiently expensive recourse.
    Validate {
        instance: PathBuf,
        /// Probe right-hand sides for the completeness check.
        #[arg(long, default_value_t = 50)]
        probes: usize,
    },
    /// List the bases of W, their determinants and dual feasibility.
    Bases {
        instance: PathBuf,
        /// Cost vector, comma separated; defaults to the first support point.
        #[arg(long, allow_hyphen_values = true)]
        q: Option<String>,
    },
    /// Affine-plus-periodic components for one cost vector.
    Periodic {
        instance: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        q: Option<String>,
        /// Probes per margin rung when searching the Gomory margin.
        #[arg(long, default_value_t = 100)]
        probes: usize,
    },
    /// Monte Carlo estimates of the recourse function and its approximations.
    Eval {
        instance: PathBuf,
        /// First-stage point, comma separated; repeat for several points.
        /// Defaults to five points across the first-stage box.
        #[arg(long, allow_hyphen_values = true)]
        x: Vec<String>,
        #[arg(long, default_value = "exact,shifted,alpha")]
        which: String,
    },
    /// Simple integer recourse: series value against the general estimator.
    Sir {
        #[arg(long)]
        qplus: String,
        #[arg(long)]
        qminus: String,
        /// `normal:mu,sigma` or `uniform:a,b`.
        #[arg(long)]
        h: String,
        /// First-stage values, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long = "tail-tol", default_value_t = 1e-12)]
        tail_tol: f64,
    },
    /// Bound constants and the parametric bound.
    Bound {
        instance: PathBuf,
        /// A nonnegative number, or `calibrate` to take the largest sweep ratio.
        #[arg(long = "C")]
        c: String,
        #[arg(long, default_value = "h_sigma")]
        param: String,
        #[arg(long, default_value = "0.5,1,2,4")]
        values: String,
        /// First-stage grid points for sup-errors.
        #[arg(long, default_value_t = 5)]
        grid: usize,
    },
    /// Sup-error against the bound across parameter variants.
    Sweep {
        instance: PathBuf,
        /// One of h_sigma, q_scale, alpha.
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long, default_value_t = 5)]
        grid: usize,
    },
    /// Summarize a sweep CSV.
    Report {
        csv: PathBuf,
        /// Also certify the shift of every basis of this instance.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        probes: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Bases { .. } => "bases",
            Command::Periodic { .. } => "periodic",
            Command::Eval { .. } => "eval",
            Command::Sir { .. } => "sir",
            Command::Bound { .. } => "bound",
            Command::Sweep { .. } => "sweep",
            Command::Report { .. } => "report",
        }
    }

    pub fn instance(&self) -> Option<&PathBuf> {
        match self {
            Command::Validate { instance, .. }
            | Command::Bases { instance, .. }
            | Command::Periodic { instance, .. }
            | Command::Eval { instance, .. }
            | Command::Bound { instance, .. }
            | Command::Sweep { instance, .. } => Some(instance),
            Command::Report { instance, .. } => instance.as_ref(),
            Command::Sir { .. } => None,
        }
    }
}

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input.
    Usage(String),
    /// A check failed or a computation errored.
    Check(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Check(_) => EXIT_CHECK,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Check(m) => m,
        }
    }
}

impl From<mirlab_core::MirError> for Failure {
    fn from(e: mirlab_core::MirError) -> Self {
        use mirlab_core::MirError as E;
        match e {
            E::Parse(_) | E::Invariant { .. } | E::Io(_) | E::InvalidArgument(_) | E::Distribution(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Check(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("io error: {e}"))
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    let result = match cli.global.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => {
                let mut buf = Vec::new();
                let r = pool.install(|| commands::dispatch(&cli, &mut buf));
                let _ = stdout.write_all(&buf);
                r
            }
            Err(e) => Err(Failure::Usage(format!("cannot start {t} threads: {e}"))),
        },
        None => commands::dispatch(&cli, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}
