//! Batch front-end: parses fan/polarization files, dispatches to the exact and Bergman-side
//! crates and renders JSON, TSV or CSV reports.
//!
//! Exit statuses: 0 on success, 2 when the input or a parameter is rejected, 3 when a numerical
//! procedure fails to converge (any partial trace is still written), 1 when `selftest` finds a
//! failing case.

pub mod args;
pub mod commands;
pub mod report;
pub mod selftest;

use std::ffi::OsString;

use clap::Parser;

pub use args::RunConfig;
pub use commands::{Failure, EXIT_NUMERIC, EXIT_VALIDATION};

use args::Format;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(cfg: &RunConfig) -> RunOutput {
    let format = cfg.format.unwrap_or(Format::Json);
    match commands::dispatch(cfg) {
        Ok((report, code)) => RunOutput { code, stdout: report.render(format, cfg.json_style), stderr: String::new() },
        Err(f) => RunOutput {
            code: f.code,
            stdout: f.partial.map(|r| r.render(format, cfg.json_style)).unwrap_or_default(),
            stderr: format!("error: {}\n", f.message),
        },
    }
}

/// Parses `argv` (program name first) and runs it.
pub fn run_args<I, T>(argv: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match RunConfig::try_parse_from(argv) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            if e.use_stderr() {
                RunOutput { code, stdout: String::new(), stderr: text }
            } else {
                RunOutput { code, stdout: text, stderr: String::new() }
            }
        }
    }
}
