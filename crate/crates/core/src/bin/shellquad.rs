use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use shellquad::cli::{self, Cli, EXIT_USAGE};
use shellquad::parallel;

fn main() -> ExitCode {
    let args = match Cli::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(threads) = parallel::threads_from_env() {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("warning: cannot configure {threads} worker threads: {e}");
        }
    }
    let outcome = cli::run(&args);
    if let Some(message) = &outcome.message {
        eprintln!("error: {message}");
    }
    if !outcome.payload.is_empty() {
        let written = match &args.out {
            Some(path) => std::fs::write(path, &outcome.payload),
            None => std::io::stdout().write_all(outcome.payload.as_bytes()),
        };
        if let Err(e) = written {
            eprintln!("error: cannot write report: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
