use std::process::ExitCode;

use clap::Parser;
use twcc_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twcc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
