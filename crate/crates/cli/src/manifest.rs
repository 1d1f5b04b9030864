use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::Command;
use hinprop::{Error, Result};

/// Everything needed to run a command again: the fully resolved arguments,
/// the tool version and when the run happened.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Command,
    pub version: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

impl RunManifest {
    pub fn new(config: Command, started_at: DateTime<Utc>) -> Self {
        let command = match &config {
            Command::Build(_) => "build",
            Command::Train(_) => "train",
            Command::BenchUpdate(_) => "bench-update",
            Command::Synth(_) => "synth",
            Command::Replay(_) => "replay",
        };
        RunManifest {
            command: command.to_string(),
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            finished_at: Utc::now(),
        }
    }

    /// `manifest-<command>.json`, so commands sharing a directory keep
    /// separate records.
    pub fn file_name(&self) -> String {
        format!("manifest-{}.json", self.command)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        crate::commands::write_json(&dir.join(self.file_name()), self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}
