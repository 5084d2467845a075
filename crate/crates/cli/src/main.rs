use std::process::ExitCode;

use clap::Parser;
use freefock_cli::{run, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match run(&config, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("freefock: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
