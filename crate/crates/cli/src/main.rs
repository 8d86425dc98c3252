mod args;
mod emit;
mod run;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use crate::args::Cli;
use crate::emit::Emitter;

/// Why a run failed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or input data: exit 2.
    Usage(String),
    /// A size cap was hit: exit 3.
    Resource(String),
    /// Anything else: exit 1.
    Other(String),
}

impl From<continuant_lab::Error> for Failure {
    fn from(e: continuant_lab::Error) -> Failure {
        use continuant_lab::Error as E;
        match e {
            E::Input(_) => Failure::Usage(e.to_string()),
            E::Resource(_) => Failure::Resource(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let em = Emitter {
        config: json!({"command": cli.command, "format": cli.format}),
        seed: cli.seed,
        format: cli.format,
    };
    match run::run(&cli, &em) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (2, m),
                Failure::Resource(m) => (3, m),
                Failure::Other(m) => (1, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
