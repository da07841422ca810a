mod args;
mod commands;
mod provenance;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Exit status for malformed invocations (sysexits `EX_USAGE`).
const EXIT_USAGE: u8 = 64;
/// Exit status for invalid data, failed checks and I/O errors.
const EXIT_FAILURE: u8 = 2;

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
    let result = match &cli.command {
        Command::Landscape(a) => single_threaded(|| commands::landscape(a)),
        Command::Distance(a) => single_threaded(|| commands::distance(a)),
        Command::Variance(a) => single_threaded(|| commands::variance(a)),
        Command::Sensitivity(a) => commands::sensitivity(a),
        Command::Outliers(a) => single_threaded(|| commands::outliers(a)),
        Command::Cluster(a) => single_threaded(|| commands::cluster(a)),
        Command::Compress(a) => single_threaded(|| commands::compress(a)),
        Command::Mantel(a) => single_threaded(|| commands::mantel(a)),
        Command::CompareMms(a) => single_threaded(|| commands::compare(a)),
        Command::BuildMms(a) => commands::build(a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

/// Runs `f` on one worker thread, so results never depend on scheduling.
fn single_threaded(f: impl FnOnce() -> presto::Result<String> + Send) -> presto::Result<String> {
    match rayon::ThreadPoolBuilder::new().num_threads(1).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
