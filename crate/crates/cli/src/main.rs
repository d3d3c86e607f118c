use std::process::ExitCode;

use clap::Parser;
use crtorsion_cli::config::RunConfig;

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    match crtorsion_cli::run(&cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
