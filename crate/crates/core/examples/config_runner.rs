//! Runs a JSON configuration file and prints the session as JSON.
//!
//! ```text
//! cargo run --release --example config_runner -- crates/core/examples/configs/decoy_spns.json
//! ```

use std::process::ExitCode;

use pns_core::config::parse_config;
use pns_core::report::session_json;
use pns_core::run_session;

fn main() -> ExitCode {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/decoy_spns.json").into());
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{path}: {e}");
            return ExitCode::from(2);
        }
    };
    let session = match parse_config(&text).and_then(|c| c.session_config()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{path}: {e}");
            return ExitCode::from(2);
        }
    };
    match run_session(&session) {
        Ok(report) => {
            println!("{}", session_json(&report));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}
