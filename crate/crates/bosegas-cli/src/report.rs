//! CSV and JSON artifact writers. Floats are printed with 17 significant
//! digits so doubles round-trip losslessly, and column order is fixed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::CliError;

pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.16e}")
    }
}

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, CliError> {
        let file = File::create(path).map_err(CliError::io)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header.join(",")).map_err(CliError::io)?;
        Ok(Self { out })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        writeln!(self.out, "{}", fields.join(",")).map_err(CliError::io)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(CliError::io)
    }
}

/// Manifest of a pipeline run: versions, config hash, achieved tolerances.
/// No wall-clock data, so reruns are byte-identical.
#[derive(serde::Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub subcommand: String,
    pub artifacts: Vec<String>,
    pub metrics: serde_json::Map<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(subcommand: &str, config_hash: String, seed: u64) -> Self {
        Self {
            tool: "bosegas",
            version: env!("CARGO_PKG_VERSION"),
            config_hash,
            seed,
            subcommand: subcommand.to_string(),
            artifacts: Vec::new(),
            metrics: serde_json::Map::new(),
        }
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(
            key.to_string(),
            serde_json::Value::String(fmt_f64(value)),
        );
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.metrics
            .insert(key.to_string(), serde_json::Value::String(value.into()));
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::io(std::io::Error::other(e)))?;
        std::fs::write(path, text + "\n").map_err(CliError::io)
    }
}
