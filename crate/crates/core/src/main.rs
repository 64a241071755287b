use std::process::ExitCode;

use clap::Parser;
use latcf::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(&cli.command, &mut stdout) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("latcf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
