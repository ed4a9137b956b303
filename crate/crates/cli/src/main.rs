use std::process::ExitCode;

use clap::Parser;
use tdstab_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tdstab: {e}");
            ExitCode::from(e.code())
        }
    }
}
