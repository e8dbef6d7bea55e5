use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use ambiguity_kit::commands::{repro_rows, repro_table};
use ambiguity_kit::{
    parse_config, run, CommandName, ExperimentConfig, Options, EXIT_CONSISTENT, EXIT_ERROR,
    EXIT_VIOLATED,
};

#[derive(Parser)]
#[command(
    name = "ambiguity-kit",
    version,
    about = "Audit and compare ambiguity-averse preference models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a model on a list of acts.
    Eval(Common),
    /// Classify absolute and relative ambiguity attitudes by sampling.
    Audit(Common),
    /// Build the quasiconvex dual on a grid and check its properties.
    Dualize(Common),
    /// Analyze an exchange economy: feasibility, Pareto search, shared beliefs.
    Share(Common),
    /// Recompute the reference table of published values.
    Repro(ReproArgs),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json and CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct ReproArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
}

const THREADS_VAR: &str = "AMBIGUITY_KIT_THREADS";

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_VAR} must be a nonnegative integer, got {raw:?}"))?;
    // 0 lets rayon pick
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")
}

fn execute(cli: Cli) -> Result<u8> {
    configure_threads()?;
    let (command, config, opts) = match cli.command {
        Command::Eval(c) => (
            CommandName::Eval,
            Some(c.config),
            Options {
                seed: c.seed,
                tol: c.tol,
                out: c.out,
            },
        ),
        Command::Audit(c) => (
            CommandName::Audit,
            Some(c.config),
            Options {
                seed: c.seed,
                tol: c.tol,
                out: c.out,
            },
        ),
        Command::Dualize(c) => (
            CommandName::Dualize,
            Some(c.config),
            Options {
                seed: c.seed,
                tol: c.tol,
                out: c.out,
            },
        ),
        Command::Share(c) => (
            CommandName::Share,
            Some(c.config),
            Options {
                seed: c.seed,
                tol: c.tol,
                out: c.out,
            },
        ),
        Command::Repro(c) => (
            CommandName::Repro,
            c.config,
            Options {
                seed: c.seed,
                tol: c.tol,
                out: c.out,
            },
        ),
    };
    let cfg = match &config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::empty(),
    };
    let start = Instant::now();
    let report = run(command, &cfg, &opts)?;
    let elapsed = start.elapsed();

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if command == CommandName::Repro {
        write!(out, "{}", repro_table(&repro_rows()?))?;
    }
    report.summarize(&mut out)?;
    if let Some(dir) = &opts.out {
        report
            .write(dir)
            .with_context(|| format!("writing the report to {}", dir.display()))?;
    }
    eprintln!("finished in {elapsed:.2?}");
    Ok(if report.status.is_consistent() {
        EXIT_CONSISTENT
    } else {
        EXIT_VIOLATED
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not errors; usage errors exit 1, not clap's 2
            let code = if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_CONSISTENT
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
