//! `har report`: render CSV and JSONL output files as aligned text tables.

use crate::errors::CliError;
use clap::Parser;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser, Serialize)]
pub struct Args {
    /// CSV or JSONL files to render.
    pub files: Vec<PathBuf>,
}

fn render_rows(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, cell)| format!("{:<width$}", cell, width = widths[i]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn render_csv(text: &str) -> String {
    let rows: Vec<Vec<String>> = text
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect();
    render_rows(&rows)
}

fn render_jsonl(text: &str) -> Result<String, CliError> {
    let mut keys: Vec<String> = Vec::new();
    let mut objects = Vec::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| CliError::data(format!("bad JSONL line: {e}")))?;
        if let serde_json::Value::Object(map) = &value {
            for k in map.keys() {
                if !keys.contains(k) {
                    keys.push(k.clone());
                }
            }
        }
        objects.push(value);
    }
    let mut rows = vec![keys.clone()];
    for obj in &objects {
        rows.push(
            keys.iter()
                .map(|k| match obj.get(k) {
                    Some(serde_json::Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                    None => String::new(),
                })
                .collect(),
        );
    }
    Ok(render_rows(&rows))
}

pub fn run(args: Args) -> Result<(), CliError> {
    if args.files.is_empty() {
        return Err(CliError::config("no files given"));
    }
    for path in &args.files {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        println!("== {}", path.display());
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "jsonl" => print!("{}", render_jsonl(&text)?),
            _ => print!("{}", render_csv(&text)),
        }
        println!();
    }
    Ok(())
}
