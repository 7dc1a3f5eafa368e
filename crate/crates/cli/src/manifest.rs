//! `manifest.json`: what ran, with which inputs and seeds, and what it wrote.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub version: &'static str,
    pub argv: &'a [String],
    pub seed: u64,
    /// `(purpose tag, derived seed)` for every random stream the run used.
    pub streams: Vec<(String, u64)>,
    pub jobs: usize,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub started: String,
    pub finished: String,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, argv: &'a [String], seed: u64, config: serde_json::Value) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            argv,
            seed,
            streams: Vec::new(),
            jobs: rayon::current_num_threads(),
            config,
            outputs: Vec::new(),
            warnings: Vec::new(),
            started: now(),
            finished: String::new(),
        }
    }

    pub fn write(mut self, dir: &Path) -> Result<()> {
        self.finished = now();
        let path = dir.join("manifest.json");
        let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(file, &self)?;
        Ok(())
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
