use std::process::ExitCode;

use bec_nonclassical::cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("becnc {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
