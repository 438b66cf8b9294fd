//! `langevin-kit`: coupled contraction runs, spectral contours, certificates
//! and sampling/bias tables from the command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or validation error,
//! 3 every run diverged, 4 certificate failed.
//!
//! Output schemas (floats use `{:.16e}`):
//! - `couple`: `pair,k,distance` (exact gradients) or
//!   `k,mean_sq_distance,se` (minibatch gradients, overdamped schemes).
//! - `spectral`: `gamma,h,value,divergent`, plus `ci` for rOABAO.
//! - `certify`: JSON report with `min_a`, `min_determinant` and `pass`.
//! - `sample`: `scheme,h,gamma,grad,batch,mean,se,ess,grad_evals,status`.
//! - `bias`: `scheme,h,gamma,grad,batch,bias,se,ess,grad_evals,status`.
//!
//! With several schemes, `couple` and `spectral` write one file per scheme,
//! named `<stem>-<TAG>.<ext>` after `--out`.

mod args;
mod commands;
mod error;
mod output;
mod target;

use std::process::ExitCode;

use clap::Parser;

use args::{resolve, write_config, Cli, Command, CommandConfig};
use error::{CliError, Outcome, EXIT_USAGE};

const THREADS_VAR: &str = "LANGEVIN_KIT_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

macro_rules! dispatch {
    ($flags:expr, $name:literal, $variant:ident, $run:path) => {{
        let io = $flags.io.clone();
        let resolved = resolve(&$flags, &io, $name)?;
        if let Some(path) = &io.write_config {
            write_config(path, CommandConfig::$variant(resolved.clone()))?;
        }
        $run(&resolved)
    }};
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Couple(a) => dispatch!(a, "couple", Couple, commands::couple),
        Command::Spectral(a) => dispatch!(a, "spectral", Spectral, commands::spectral),
        Command::Certify(a) => dispatch!(a, "certify", Certify, commands::certify),
        Command::Sample(a) => dispatch!(a, "sample", Sample, commands::sample),
        Command::Bias(a) => dispatch!(a, "bias", Bias, commands::bias),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
