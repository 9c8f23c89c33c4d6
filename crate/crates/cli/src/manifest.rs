//! Run manifests: every subcommand writes one JSON manifest next to its
//! primary output recording the resolved configuration, input content
//! hashes, seed, tool version, and wall-clock duration.

use std::path::{Path, PathBuf};
use std::time::Instant;

use cofusion_tensor::fnv1a64;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Serialize)]
pub struct InputRecord {
    pub path: String,
    /// FNV-1a 64 of the file contents, hex.
    pub fnv64: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub duration_ms: u64,
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str) -> Self {
        ManifestBuilder {
            manifest: RunManifest {
                subcommand: subcommand.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                seed: None,
                inputs: Vec::new(),
                outputs: Vec::new(),
                config: None,
                duration_ms: 0,
            },
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.manifest.seed = Some(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let bytes = std::fs::read(path)?;
        self.manifest.inputs.push(InputRecord {
            path: path.display().to_string(),
            fnv64: format!("{:016x}", fnv1a64(&bytes)),
        });
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.manifest.outputs.push(path.display().to_string());
        self
    }

    pub fn config_json(&mut self, json: &str) -> Result<&mut Self> {
        self.manifest.config = Some(
            serde_json::from_str(json)
                .map_err(|e| crate::error::CliError::Data(format!("config json: {e}")))?,
        );
        Ok(self)
    }

    /// Write "<primary output>.manifest.json".
    pub fn write(mut self, primary_output: &Path) -> Result<PathBuf> {
        self.manifest.duration_ms = self.started.elapsed().as_millis() as u64;
        let mut name = primary_output.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let body = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| crate::error::CliError::Data(format!("manifest: {e}")))?;
        std::fs::write(&path, body)?;
        Ok(path)
    }
}
