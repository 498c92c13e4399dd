use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match expertbench::cli::run(expertbench::cli::Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
