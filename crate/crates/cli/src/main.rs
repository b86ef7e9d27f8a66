use std::process::ExitCode;

use clap::Parser;
use custctl_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(outcome) if outcome.converged => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("warning: iteration did not converge; artifacts written to:");
            for p in &outcome.written {
                eprintln!("  {}", p.display());
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
