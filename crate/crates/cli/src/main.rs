use std::process::ExitCode;

use barysub_cli::{execute, RunConfig};
use clap::Parser;

fn main() -> ExitCode {
    let config = RunConfig::parse();
    let mut stdout = std::io::stdout().lock();
    match execute(&config, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.report() });
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&report).expect("error report serializes")
            );
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
