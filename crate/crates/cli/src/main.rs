mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

const EXIT_USAGE: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let out = match &cli.command {
        Command::Sweep(a) => a.out.as_deref(),
        Command::Drive(a) => a.out.as_deref(),
        Command::Benchmark(a) => a.out.as_deref(),
        Command::GenTerrain(a) => Some(a.out.as_path()),
        Command::Timing(a) => a.out.as_deref(),
        Command::Evaluate(_) => None,
    };
    let result = commands::check_out_dir(out).and_then(|_| match &cli.command {
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Drive(a) => commands::drive(a),
        Command::Benchmark(a) => commands::run_benchmark(a),
        Command::GenTerrain(a) => commands::gen_terrain(a),
        Command::Timing(a) => commands::timing(a),
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_INPUT as u8)
        }
    }
}
