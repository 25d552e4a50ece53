mod commands;
mod data;
mod io_util;
mod manifest;
mod opts;

use std::process::ExitCode;

use clap::Parser;
use msnet_core::ErrorClass;

fn main() -> ExitCode {
    let cli = match opts::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Validation => 1,
                ErrorClass::IoOrFormat => 2,
            })
        }
    }
}
