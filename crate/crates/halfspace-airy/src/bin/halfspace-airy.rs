//! `halfspace-airy <command> --config <path> [--out <path>] [--seed <u64>]`
//!
//! Exit codes: 0 success, 2 usage, 3 numerical failure, 4 I/O.
//! `HSA_THREADS` caps the number of worker threads.

use clap::Parser;
use halfspace_airy::harness::{run_experiment, write_outputs, Command, ExperimentConfig, OutputFormat};
use halfspace_airy::Error;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "halfspace-airy", version, about = "Kernels, gap probabilities and samplers for the half-space Airy line ensemble")]
struct Cli {
    /// One of kernel-eval, gap-prob, sample, converge, validate.
    command: String,
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Output file (`.svg` selects SVG, anything else CSV); stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed overriding the configuration's `seed` key.
    #[arg(long)]
    seed: Option<u64>,
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("HSA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Usage(format!("HSA_THREADS must be a positive integer, found '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Usage(format!("cannot configure {n} threads: {e}")))
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    let command: Command = cli.command.parse()?;
    let mut cfg = ExperimentConfig::from_file(command, &cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    let table = run_experiment(&cfg)?;
    match &cli.out {
        Some(path) => write_outputs(&table, path, OutputFormat::from_path(path))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(table.to_csv().as_bytes())
                .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })?;
        }
    }
    let failures = table.validation_failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::Consistency(format!("{} validation check(s) failed: rows {failures:?}", failures.len())))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("halfspace-airy: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
