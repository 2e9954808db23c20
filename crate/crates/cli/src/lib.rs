//! Command-line front end: argument parsing, command dispatch and the JSON
//! and CSV emitters.

pub mod config;
pub mod output;
pub mod run;

use std::fs;
use std::path::Path;

use config::{OutFormat, RunConfig};
use output::{ErrorEnvelope, ErrorPayload, ResultEnvelope, TOOL_VERSION};
use run::{execute, scalar_csv, CliError, Outcome};

/// Environment variable that fixes the rayon pool size.
pub const THREADS_ENV: &str = "BESSELSTOP_THREADS";

fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn render(cfg: &RunConfig, out: &Outcome) -> Result<(String, Option<String>), CliError> {
    let envelope = ResultEnvelope {
        tool_version: TOOL_VERSION.to_string(),
        config: cfg.clone(),
        results: out.results.clone(),
        timing_seconds: out.seconds,
    };
    match cfg.out_format {
        OutFormat::Json => Ok((serde_json::to_string_pretty(&envelope)? + "\n", None)),
        OutFormat::Csv => {
            let body = out.csv.clone().unwrap_or_else(|| scalar_csv(&out.results));
            let meta = serde_json::json!({
                "tool_version": envelope.tool_version,
                "config": envelope.config,
                "timing_seconds": envelope.timing_seconds,
            });
            Ok((body, Some(serde_json::to_string_pretty(&meta)? + "\n")))
        }
    }
}

fn emit(cfg: &RunConfig, out: &Outcome) -> Result<(), CliError> {
    let (body, meta) = render(cfg, out)?;
    match &cfg.out_path {
        Some(path) => {
            fs::write(path, body)?;
            if let Some(meta) = meta {
                fs::write(sidecar(path), meta)?;
            }
        }
        None => print!("{body}"),
    }
    Ok(())
}

/// Runs one invocation and returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let result = execute(cfg).and_then(|out| emit(cfg, &out).map(|_| out.success));
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            let envelope = ErrorEnvelope {
                tool_version: TOOL_VERSION.to_string(),
                config: cfg.clone(),
                error: ErrorPayload {
                    kind: e.kind().to_string(),
                    message: e.to_string(),
                },
            };
            if let Ok(s) = serde_json::to_string_pretty(&envelope) {
                println!("{s}");
            }
            1
        }
    }
}
