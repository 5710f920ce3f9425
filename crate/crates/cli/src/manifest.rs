use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::format::{read_json, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoringSummary {
    pub replicates: usize,
    pub censored: usize,
    /// `(n, censored at n)`.
    pub per_n: Vec<(usize, usize)>,
}

/// Sidecar describing one CLI run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub runtime_seconds: f64,
    pub config: serde_json::Value,
    pub threads: Option<usize>,
    /// Paths relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub censoring: Option<CensoringSummary>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            tool: "lmar".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            runtime_seconds: 0.0,
            config,
            threads: None,
            outputs: Vec::new(),
            censoring: None,
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        read_json(path)
    }
}
