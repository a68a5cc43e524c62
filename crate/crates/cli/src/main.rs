//! `qc`: command-line front end for the qc-core toolkit.
//!
//! Results are written to standard output as CSV; summaries and timings go
//! to standard error. Exit codes: 0 success, 1 failed check or accuracy
//! error, 2 usage error, 3 capability or budget error.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qc_core::QcError;

/// Errors reported by the command-line front end.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(QcError),
}

impl From<QcError> for CliError {
    fn from(e: QcError) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(QcError::Argument(_)) => 2,
            CliError::Core(QcError::Capability(_) | QcError::Budget { .. }) => 3,
            CliError::Core(QcError::Accuracy(_) | QcError::Internal(_)) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qc", version, about = "Weighted lattice point counts on the quadric x . y = m")]
struct Cli {
    /// JSON manifest supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: commands::Command,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("QC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("QC_THREADS must be a positive integer, got '{v}'")))?;
    if n == 0 {
        return Err(CliError::Usage("QC_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| commands::run(&cli.command, cli.config.as_ref()));
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.csv.as_bytes());
            let _ = stdout.flush();
            let mut stderr = std::io::stderr().lock();
            for line in &out.summary {
                let _ = writeln!(stderr, "# {line}");
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("qc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
