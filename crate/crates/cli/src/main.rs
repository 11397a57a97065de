use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = sharevote_cli::Cli::parse();
    match sharevote_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
