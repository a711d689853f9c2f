mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use commands::{execute, Report, RunError};
use config::{merge, read_settings, Cli, ConfigError, Format, Settings};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_ASSERTION: u8 = 3;

fn settings() -> Result<Settings, ConfigError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG.into(),
            });
        }
    };
    let (config_path, flags) = cli.into_settings();
    let Some(path) = config_path else {
        return Ok(flags);
    };
    let file = read_settings(&path)?;
    let (merged, warnings) = merge(&flags, &file)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(merged)
}

fn emit(settings: &Settings, report: &Report) -> Result<(), ConfigError> {
    let text = match settings.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.json).map_err(|e| ConfigError(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => report.csv.clone(),
    };
    match &settings.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| ConfigError(format!("cannot write to stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let settings = match settings() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let report = match execute(&settings) {
        Ok(r) => r,
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(RunError::Numeric(e)) => {
            eprintln!("numerical failure: {e}");
            return ExitCode::from(EXIT_NUMERIC);
        }
    };
    if let Err(e) = emit(&settings, &report) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &report.failures {
            eprintln!("assertion failed: {f}");
        }
        ExitCode::from(EXIT_ASSERTION)
    }
}
