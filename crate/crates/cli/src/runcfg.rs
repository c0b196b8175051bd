//! Run-directory conventions: a config echo written before any computation
//! and a summary written on success, so partial runs are detectable.

use crate::errors::CliError;
use serde::Serialize;
use std::path::Path;

pub fn prepare_run_dir(dir: &Path, command: &str, args: &impl Serialize) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let echo = serde_json::json!({
        "command": command,
        "args": args,
    });
    std::fs::write(dir.join("config_echo.json"), serde_json::to_string_pretty(&echo)?)?;
    Ok(())
}

pub fn write_summary(dir: &Path, summary: &serde_json::Value) -> Result<(), CliError> {
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)?)?;
    Ok(())
}
