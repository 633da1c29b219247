use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use ppktp_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((summary, written)) => {
            // a closed stdout (e.g. piped into head) is not a failure of the run
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{summary}");
            for p in written {
                let _ = writeln!(out, "wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
