//! Output directory handling and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct ConditionSummary {
    pub threshold: f64,
    pub all_satisfied: bool,
    pub failing: Vec<String>,
    /// Checksum of the serialized condition report.
    pub report_sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub command_line: Vec<String>,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub jobs: usize,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputEntry>,
    pub condition_report: Option<ConditionSummary>,
    /// Free-form per-run results (fits, failures, status).
    pub results: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct RunContext {
    subcommand: String,
    dir: PathBuf,
    started: Instant,
    started_unix: u64,
    outputs: Vec<OutputEntry>,
    pub condition_report: Option<ConditionSummary>,
    pub results: serde_json::Value,
}

impl RunContext {
    pub fn new(subcommand: &str, dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)?;
        Ok(RunContext {
            subcommand: subcommand.to_string(),
            dir,
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs: Vec::new(),
            condition_report: None,
            results: serde_json::Value::Null,
        })
    }

    /// Base name for the main CSV: the output directory's own name.
    pub fn stem(&self) -> String {
        self.dir
            .file_name()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty() && *s != "." && *s != "..")
            .unwrap_or(&self.subcommand)
            .to_string()
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.outputs.push(OutputEntry {
            file: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(self, config: &BTreeMap<String, String>, jobs: usize) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            subcommand: self.subcommand,
            command_line: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            jobs,
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
            condition_report: self.condition_report,
            results: self.results,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Other(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

/// Accumulates CSV text with a fixed header.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// Gnuplot script drawing each `(using, style)` series from `csv`.
pub fn gnuplot_script(title: &str, csv: &str, xlabel: &str, ylabel: &str, series: &[(&str, &str)]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str(&format!("set title '{title}'\n"));
    s.push_str(&format!("set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n"));
    let plots: Vec<String> = series
        .iter()
        .map(|(using, style)| format!("'{csv}' using {using} {style}"))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
