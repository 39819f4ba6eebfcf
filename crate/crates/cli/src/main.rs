use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use lorentz_cli::{execute, Cli, CliError, ExitKind};

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LORENTZ_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::new(ExitKind::Usage, format!("LORENTZ_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::new(ExitKind::Usage, e.to_string()))
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    configure_threads()?;
    let outcome = execute(&cli.command)?;
    let stdout = outcome.write()?;
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    let mut lock = std::io::stdout().lock();
    lock.write_all(stdout.as_bytes())
        .and_then(|_| lock.flush())
        .map_err(|e| CliError::new(ExitKind::Io, format!("stdout: {e}")))
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
