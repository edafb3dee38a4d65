mod config;
mod csv;
mod error;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use config::{Cli, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match RunConfig::from_cli(cli).and_then(|cfg| run::run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvqkd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
