//! `expgeom` command-line front end: family registry, invariance suite,
//! CLT tables, tensor reports and the uniqueness demo, all as CSV.
//!
//! Exit codes: 0 when every checked row is within tolerance, 2 when some
//! row fails, 1 on usage errors.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, Settings};
use crate::report::{render, sort_rows, Row};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED_CHECK: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "expgeom", version, about = "Fisher-metric invariance checks for exponential families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the built-in families.
    Families(Flags),
    /// Fisher information matrix by route A, B or C.
    Fisher(Flags),
    /// A1, A2, A3 and the standardised-chain checks.
    Invariance(Flags),
    /// Moment gap and KS distance of the standardised mean to N(0, I).
    Clt(Flags),
    /// Higher-order tensor checks.
    Tensor(Flags),
    /// Across-n residuals of candidate norms and recovery of the constant.
    Uniqueness(Flags),
}

#[derive(Debug, Args, Clone, Default)]
struct Flags {
    /// Family name (see `families`).
    #[arg(long)]
    family: Option<String>,
    /// Family parameters, comma separated.
    #[arg(long)]
    params: Option<String>,
    /// `grid`, or points separated by `;` with coordinates separated by `,`.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Sample sizes, comma separated and ascending.
    #[arg(long)]
    n: Option<String>,
    /// Fisher route: A, B or C.
    #[arg(long)]
    route: Option<String>,
    /// Tolerance for every checked row.
    #[arg(long)]
    tol: Option<String>,
    /// Seed for tangent-direction sampling.
    #[arg(long)]
    seed: Option<String>,
    /// Output file (standard output if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// INI file of `key = value` settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn settings(&self) -> Result<Settings, String> {
        let file = match &self.config {
            Some(path) => Settings::from_file(path).map_err(|e| e.to_string())?,
            None => Settings::default(),
        };
        Ok(file.overridden_by(Settings {
            family: self.family.clone(),
            params: self.params.clone(),
            theta: self.theta.clone(),
            n: self.n.clone(),
            route: self.route.clone(),
            tol: self.tol.clone(),
            seed: self.seed.clone(),
            out: self.out.as_ref().map(|p| p.display().to_string()),
            ..Settings::default()
        }))
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (flags, job): (&Flags, fn(&RunConfig) -> Vec<Row>) = match &cli.command {
        Command::Families(flags) => {
            let out = match flags.settings() {
                Ok(s) => s.out.map(PathBuf::from),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            };
            let listing = commands::cmd_families().map_err(|e| e.to_string());
            return match listing.and_then(|text| emit(&text, out.as_ref())) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_USAGE
                }
            };
        }
        Command::Fisher(f) => (f, commands::cmd_fisher),
        Command::Invariance(f) => (f, commands::cmd_invariance),
        Command::Clt(f) => (f, commands::cmd_clt),
        Command::Tensor(f) => (f, commands::cmd_tensor),
        Command::Uniqueness(f) => (f, commands::cmd_uniqueness),
    };
    let cfg = match flags.settings().and_then(|s| RunConfig::from_settings(&s).map_err(|e| e.to_string())) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut rows = job(&cfg);
    sort_rows(&mut rows);
    if let Err(e) = emit(&render(&rows), cfg.out.as_ref()) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let failed = rows.iter().filter(|r| r.pass() == Some(false)).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows outside tolerance", rows.len());
        EXIT_FAILED_CHECK
    } else {
        EXIT_OK
    }
}
