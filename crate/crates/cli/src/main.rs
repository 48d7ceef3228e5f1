use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qauto_cli::args::run_job;
use qauto_cli::error::ErrorRecord;
use qauto_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.resolve().and_then(|(job, cfg)| run_job(job, &cfg));
    let mut stderr = std::io::stderr().lock();
    match result {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            if outcome.failures.is_empty() {
                return ExitCode::SUCCESS;
            }
            for f in &outcome.failures {
                let rec = ErrorRecord { error: "operation_failed", message: f.clone() };
                let _ = writeln!(stderr, "{}", serde_json::to_string(&rec).unwrap_or_default());
            }
            ExitCode::FAILURE
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", serde_json::to_string(&e.record()).unwrap_or_default());
            ExitCode::FAILURE
        }
    }
}
