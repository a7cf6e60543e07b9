//! Argument parsing and dispatch for the `symtest` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, Format, RunConfig};
use crate::output::to_json;
use crate::run::{run_group, run_sweep, run_test, run_trotter, run_variational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INCONSISTENT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "symtest",
    version,
    about = "Test whether a Hamiltonian's evolution is symmetric under a finite unitary group",
    long_about = "Test whether a Hamiltonian's evolution is symmetric under a finite unitary group.\n\n\
        Units: hbar = 1. NMR frequencies omega1, omega2 are angular frequencies and J is the \
        coupling constant in Hz, so the coupling term carries 2*pi*J.\n\n\
        Exit codes: 0 success, 1 usage or configuration error, 2 cross-method consistency failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
    /// Overrides the configuration seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (default: configuration `output.path`, else stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct Timed {
    #[command(flatten)]
    pub common: Common,
    /// Evolution time (default: first configured time).
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Close the generators and report order and closure checks.
    Group(Common),
    /// Every route at a single time.
    Test(Timed),
    /// Acceptance probability over the configured times.
    Sweep(Common),
    /// Best fixed-input acceptance by gradient ascent, with lower bounds.
    Variational(Timed),
    /// Product-formula error against exact evolution for each step count.
    Trotter(Timed),
}

struct Rendered {
    text: String,
    consistent: bool,
    diagnostics: Vec<String>,
}

fn pick_time(timed: &Timed, config: &RunConfig) -> Result<f64, String> {
    match (timed.t, config.times.first()) {
        (Some(t), _) if t.is_finite() => Ok(t),
        (Some(_), _) => Err("--t must be finite".into()),
        (None, Some(&t)) => Ok(t),
        (None, None) => Err("no time given: pass --t or set `times` in the configuration".into()),
    }
}

fn render(command: &Command, config: &RunConfig, common: &Common) -> Result<Rendered, String> {
    let jobs = common.jobs.map(|j| j as usize);
    let fmt = |default: Format| common.format.or(config.output_format).unwrap_or(default);
    let plain = |text: String| Rendered { text, consistent: true, diagnostics: vec![] };
    let err = |e: crate::run::RunError| e.to_string();
    Ok(match command {
        Command::Group(_) => {
            let s = run_group(config).map_err(err)?;
            plain(match fmt(Format::Json) {
                Format::Json => to_json(&s),
                Format::Csv => s.csv(),
            })
        }
        Command::Test(timed) => {
            let r = run_test(config, pick_time(timed, config)?, jobs).map_err(err)?;
            let text = match fmt(Format::Json) {
                Format::Json => to_json(&r),
                Format::Csv => crate::output::to_csv(&crate::run::SWEEP_HEADER, &[r.row_fields()]),
            };
            Rendered { text, consistent: r.diagnostics.is_empty(), diagnostics: r.diagnostics }
        }
        Command::Sweep(_) => {
            let r = run_sweep(config, jobs).map_err(err)?;
            let text = match fmt(Format::Csv) {
                Format::Json => to_json(&r),
                Format::Csv => r.csv(),
            };
            Rendered { text, consistent: r.consistent(), diagnostics: r.diagnostics }
        }
        Command::Variational(timed) => {
            let r = run_variational(config, pick_time(timed, config)?, jobs).map_err(err)?;
            plain(match fmt(Format::Json) {
                Format::Json => to_json(&r),
                Format::Csv => r.csv(),
            })
        }
        Command::Trotter(timed) => {
            let r = run_trotter(config, pick_time(timed, config)?).map_err(err)?;
            plain(match fmt(Format::Csv) {
                Format::Json => to_json(&r),
                Format::Csv => r.csv(),
            })
        }
    })
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn execute<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    let common = match &cli.command {
        Command::Group(c) | Command::Sweep(c) => c,
        Command::Test(t) | Command::Variational(t) | Command::Trotter(t) => &t.common,
    };
    let mut config = match load_config(&common.config) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let rendered = match render(&cli.command, &config, common) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let target = common.out.clone().or_else(|| config.output_path.clone());
    let written = match &target {
        Some(path) => std::fs::write(path, &rendered.text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(rendered.text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_USAGE;
    }
    if rendered.consistent {
        EXIT_OK
    } else {
        let _ = writeln!(stderr, "consistency check failed:");
        for d in &rendered.diagnostics {
            let _ = writeln!(stderr, "  {d}");
        }
        EXIT_INCONSISTENT
    }
}
