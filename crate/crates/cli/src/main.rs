use std::process::ExitCode;

use cdma_paging_cli::{run, Cli, EXIT_INTERNAL, EXIT_USAGE};
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            let code = if e.code == EXIT_USAGE {
                EXIT_USAGE
            } else {
                EXIT_INTERNAL
            };
            ExitCode::from(code as u8)
        }
    }
}
