//! Command-line front end for `aglerlab`.
//!
//! Every subcommand produces a [`report::Report`]; the JSON rendering goes
//! to stdout (or `--out`) and a short human summary goes to stderr.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod error;
pub mod report;

pub use error::{exit, CliError};
pub use report::{report_render, Report, Verdict};

#[derive(Debug, Parser)]
#[command(
    name = "aglerlab",
    version,
    about = "Agler-class feasibility certificates and von Neumann witnesses"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Feasibility residual and solver verification tolerance.
    #[arg(long, global = true, env = "AGLERLAB_TOL", default_value_t = 1e-8)]
    pub tol: f64,
    /// Relative eigenvalue cutoff for Gram factors.
    #[arg(long, global = true, env = "AGLERLAB_RANK_TOL", default_value_t = 1e-9)]
    pub rank_tol: f64,
    /// Tolerance for `verify` and for post-solve checks.
    #[arg(
        long,
        global = true,
        env = "AGLERLAB_VERIFY_TOL",
        default_value_t = 1e-8
    )]
    pub verify_tol: f64,
    #[arg(
        long,
        global = true,
        env = "AGLERLAB_MAX_ITERS",
        default_value_t = 200_000
    )]
    pub max_iters: usize,
    /// Largest lattice `[N]` any solve may build.
    #[arg(
        long,
        global = true,
        env = "AGLERLAB_LATTICE_CAP",
        default_value_t = 5000
    )]
    pub lattice_cap: usize,
    /// Seed for randomized property checks. Solvers are seed-free.
    #[arg(long, global = true, env = "AGLERLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true, env = "AGLERLAB_OUT")]
    pub out: Option<PathBuf>,
    /// Suppress the human summary on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PolyArgs {
    /// Polynomial file.
    #[arg(long)]
    pub poly: PathBuf,
    /// Truncation order `N`.
    #[arg(long)]
    pub degree: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the index lattice `[N]` in graded-lex order.
    Lattice {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        degree: usize,
    },
    /// Decide cone membership; writes a certificate or a witness file.
    CfCheck {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, default_value = "certificate.json")]
        cert_out: PathBuf,
        #[arg(long, default_value = "witness.json")]
        witness_out: PathBuf,
    },
    /// Re-verify a stored certificate, separator, tuple or colligation.
    Verify(VerifyArgs),
    /// Solve, build the SOS terms and a unitary colligation, and check it.
    Realize {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, default_value = "colligation.json")]
        colligation_out: PathBuf,
        #[arg(long, default_value = "witness.json")]
        witness_out: PathBuf,
        /// Random point pairs for the identity check.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// `|p(S)|` on the canonical nilpotent tuple.
    NilNorm {
        #[command(flatten)]
        poly: PolyArgs,
    },
    /// One-variable Toeplitz contractivity test.
    Toeplitz {
        #[command(flatten)]
        poly: PolyArgs,
    },
    /// Finite-point interpolation on the polydisk.
    Pick {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value = "certificate.json")]
        cert_out: PathBuf,
        #[arg(long, default_value = "witness.json")]
        witness_out: PathBuf,
    },
    /// Built-in examples.
    Gallery {
        #[command(subcommand)]
        which: GalleryCommand,
    },
    /// Bracket the truncated Agler norm by bisection.
    AglerNorm {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, default_value_t = 1e-4)]
        bisect_tol: f64,
        #[arg(long, default_value_t = 64)]
        max_probes: usize,
        /// Iteration cap per bisection probe.
        #[arg(long, default_value_t = 20_000)]
        probe_iters: usize,
        #[arg(long)]
        trace_csv: Option<PathBuf>,
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Search orders `1..=n-max` for a tuple with `|f_N(T)| > c`.
    Witness {
        /// Polynomial file, read as its own Taylor series.
        #[arg(long)]
        poly: PathBuf,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value = "witness-tuple.json")]
        witness_out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum GalleryCommand {
    /// Three-variable von Neumann counterexample.
    Kv {
        #[arg(long)]
        tuple_out: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Size curve for `(1+z)/2` on simple nilpotent shifts.
    Hartz {
        #[arg(long, default_value_t = 40)]
        n_max: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub poly: Option<PathBuf>,
    #[arg(long)]
    pub degree: Option<usize>,
    /// Interpolation problem, for Pick certificates and separators.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long, group = "artifact")]
    pub certificate: Option<PathBuf>,
    #[arg(long, group = "artifact")]
    pub separator: Option<PathBuf>,
    #[arg(long, group = "artifact")]
    pub tuple: Option<PathBuf>,
    #[arg(long, group = "artifact")]
    pub colligation: Option<PathBuf>,
}

/// Resolved configuration: flags, then `AGLERLAB_*` variables, then defaults.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub tol: f64,
    pub rank_tol: f64,
    pub verify_tol: f64,
    pub max_iters: usize,
    pub lattice_cap: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

impl RunConfig {
    pub fn from_args(g: &GlobalArgs) -> Result<Self, CliError> {
        for (name, v) in [
            ("tol", g.tol),
            ("rank-tol", g.rank_tol),
            ("verify-tol", g.verify_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!(
                    "--{name} must be positive, got {v}"
                )));
            }
        }
        if g.max_iters == 0 {
            return Err(CliError::Usage("--max-iters must be positive".into()));
        }
        Ok(Self {
            tol: g.tol,
            rank_tol: g.rank_tol,
            verify_tol: g.verify_tol,
            max_iters: g.max_iters,
            lattice_cap: g.lattice_cap,
            seed: g.seed,
            out: g.out.clone(),
            quiet: g.quiet,
        })
    }

    pub fn solver(&self) -> aglerlab::conic::SolverOptions {
        aglerlab::conic::SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            ..Default::default()
        }
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lattice { .. } => "lattice",
            Command::CfCheck { .. } => "cf-check",
            Command::Verify(_) => "verify",
            Command::Realize { .. } => "realize",
            Command::NilNorm { .. } => "nil-norm",
            Command::Toeplitz { .. } => "toeplitz",
            Command::Pick { .. } => "pick",
            Command::Gallery { .. } => "gallery",
            Command::AglerNorm { .. } => "agler-norm",
            Command::Witness { .. } => "witness",
        }
    }
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::SUCCESS
            };
            let _ = e.print();
            return code;
        }
    };
    let name = cli.command.name();
    let outcome = RunConfig::from_args(&cli.global).and_then(|cfg| {
        let report = commands::dispatch(&cli.command, &cfg)?;
        Ok((cfg, report))
    });
    match outcome {
        Ok((cfg, report)) => {
            let (text, value) = report_render(&report);
            match emit(&cfg, &text, &value) {
                Ok(()) => report.exit_code(),
                Err(e) => {
                    eprintln!("{name}: error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            let code = e.exit_code();
            let (text, value) = report::error_render(name, code, &e.to_string());
            eprint!("{text}");
            let out = cli.global.out.as_ref().filter(|_| code != exit::USAGE);
            match out {
                Some(path) => {
                    let _ = std::fs::write(path, to_pretty(&value) + "\n");
                }
                None => print_stdout(&value),
            }
            code
        }
    }
}

fn to_pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize")
}

/// A closed pipe on stdout is not an error worth reporting.
fn print_stdout(v: &serde_json::Value) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", to_pretty(v));
}

fn emit(cfg: &RunConfig, text: &str, value: &serde_json::Value) -> Result<(), CliError> {
    if !cfg.quiet {
        eprint!("{text}");
    }
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, to_pretty(value) + "\n").map_err(|source| CliError::Write {
                path: path.clone(),
                source,
            })
        }
        None => {
            print_stdout(value);
            Ok(())
        }
    }
}
