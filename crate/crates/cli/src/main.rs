use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = chemoblow_cli::Cli::parse();
    ExitCode::from(chemoblow_cli::dispatch(cli))
}
