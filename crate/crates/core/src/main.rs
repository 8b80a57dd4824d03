use std::process::ExitCode;

use clap::Parser;
use embcharts::cli::{run, Cli};

fn main() -> ExitCode {
    run(Cli::parse())
}
