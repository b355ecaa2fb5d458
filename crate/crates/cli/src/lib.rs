//! Batch driver: parses a run configuration, dispatches to the library and
//! writes a JSON report (plus per-command extras) into the output directory.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration, 3 cap
//! refusal, 4 property violation.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

pub use config::{CommandKind, RunConfig};

pub const BUILD_ID: &str = env!("TRICOLOR_BUILD_ID");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Clap(clap::Error),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Refusal(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Clap(_) | CliError::Config(_) => 2,
            CliError::Refusal(_) => 3,
            CliError::Io(_) | CliError::Internal(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Clap(_) | CliError::Config(_) => "invalid_config",
            CliError::Refusal(_) => "cap_refusal",
            CliError::Io(_) => "io",
            CliError::Internal(_) => "internal",
        }
    }

    /// One JSON object on one line.
    pub fn line(&self) -> String {
        let message = match self {
            CliError::Clap(e) => e
                .render()
                .to_string()
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("")
                .trim_start_matches("error: ")
                .to_string(),
            other => other.to_string().replace('\n', " "),
        };
        serde_json::json!({ "error": self.kind(), "code": self.code(), "message": message }).to_string()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// What a command hands back: the result body, its provenance, and whether
/// every checked property held.
pub struct Outcome {
    pub provenance: &'static str,
    pub result: Value,
    pub violations: Vec<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'static str,
    build: &'static str,
    provenance: &'static str,
    config: &'a RunConfig,
    result: &'a Value,
    violations: &'a [String],
}

pub fn report_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join(format!("{}.json", cfg.command.name()))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_report(cfg: &RunConfig, outcome: &Outcome, elapsed: f64) -> Result<String, CliError> {
    let report = Report {
        command: cfg.command.name(),
        build: BUILD_ID,
        provenance: outcome.provenance,
        config: cfg,
        result: &outcome.result,
        violations: &outcome.violations,
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_file(&report_path(cfg), text.as_bytes())?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = serde_json::json!({ "unix_time": stamp, "elapsed_seconds": elapsed });
    write_file(&cfg.out.join(format!("{}.meta.json", cfg.command.name())), format!("{meta}\n").as_bytes())?;
    Ok(text)
}

/// Runs a resolved configuration; returns the exit code.
pub fn execute(cfg: &RunConfig) -> Result<i32, CliError> {
    if let Some(t) = cfg.threads {
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    let start = Instant::now();
    let outcome = commands::dispatch(cfg)?;
    let text = write_report(cfg, &outcome, start.elapsed().as_secs_f64())?;
    print!("{text}");
    if outcome.violations.is_empty() {
        Ok(0)
    } else {
        eprintln!(
            "{}",
            serde_json::json!({ "error": "property_violation", "code": 4, "message": outcome.violations.join("; ") })
        );
        Ok(4)
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let args: Vec<OsString> = args.into_iter().collect();
    let cfg = match config::parse(args) {
        Ok(c) => c,
        Err(CliError::Clap(e)) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            eprintln!("{}", e.line());
            return e.code();
        }
    };
    match execute(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.line());
            e.code()
        }
    }
}
