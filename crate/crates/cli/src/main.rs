use std::process::ExitCode;

use clap::Parser;

use snnss_cli::error::{EXIT_OK, EXIT_RESOURCE, EXIT_VERIFICATION};
use snnss_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return ExitCode::from(EXIT_RESOURCE as u8);
        }
    }
    let code = match execute(&cli) {
        Ok(outcome) if outcome.passed => EXIT_OK,
        Ok(_) => EXIT_VERIFICATION,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
