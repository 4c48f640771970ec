mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let report = json!({ "error": "usage", "message": e.to_string().trim_end() });
            eprintln!("{report}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Simulate(c) => commands::simulate(c),
        Command::Sample { common, state } => commands::sample_state(common, state),
        Command::Reconstruct { common, input } => commands::reconstruct(common, input),
        Command::Wigner { common, state, grid } => commands::wigner_grid(common, state, grid),
        Command::Swap(c) => commands::swap(c),
        Command::Rates(c) => commands::rates(c),
        Command::Pipeline(c) => commands::pipeline(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut report = json!({ "error": e.kind(), "message": e.to_string() });
            if let Some(line) = e.line() {
                report["line"] = json!(line);
            }
            match &e {
                railbridge::Error::MissingKeys(keys) | railbridge::Error::UnknownKeys(keys) => {
                    report["keys"] = json!(keys)
                }
                railbridge::Error::ConfigValue { key, .. } => report["keys"] = json!([key]),
                _ => {}
            }
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
