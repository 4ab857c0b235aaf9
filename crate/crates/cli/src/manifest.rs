//! Run manifest and hash-stamped output files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub seconds: f64,
    pub diagnostics: Value,
}

/// Written as `manifest_<verb>.json`; the only output that carries timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub verb: String,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<String>,
    pub config: RunConfig,
}

/// Collects stage records and writes outputs into one directory.
pub struct Recorder {
    pub dir: PathBuf,
    pub hash: String,
    verb: String,
    config: RunConfig,
    start: Instant,
    stages: Vec<StageRecord>,
    outputs: Vec<String>,
}

impl Recorder {
    pub fn new(dir: &Path, verb: &str, config: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: config.hash(),
            verb: verb.to_string(),
            config: config.clone(),
            start: Instant::now(),
            stages: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Runs `f` as a named stage and records its diagnostics.
    pub fn stage<T, F>(&mut self, name: &str, f: F) -> Result<T>
    where
        F: FnOnce() -> Result<(T, Value)>,
    {
        let t = Instant::now();
        let (out, diagnostics) = f()?;
        log::info!("{name}: {:.1} s", t.elapsed().as_secs_f64());
        self.stages.push(StageRecord {
            stage: name.to_string(),
            seconds: t.elapsed().as_secs_f64(),
            diagnostics,
        });
        Ok(out)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).expect("output serializes");
        self.write_text(name, &(text + "\n"))
    }

    pub fn finish(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            config_hash: self.hash.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            verb: self.verb.clone(),
            wall_clock_seconds: self.start.elapsed().as_secs_f64(),
            stages: self.stages,
            outputs: self.outputs,
            config: self.config,
        };
        let path = self.dir.join(format!("manifest_{}.json", self.verb));
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}
