use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    irsim::cli::run(irsim::cli::Cli::parse())
}
