use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: PathBuf,
    pub sha256: String,
    /// False for files that embed wall-clock measurements.
    pub deterministic: bool,
}

/// What a command read, what it wrote, and with which settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: Config,
    pub seeds: Vec<u64>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    #[serde(default)]
    pub notes: serde_json::Map<String, serde_json::Value>,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn artifact(path: &Path) -> anyhow::Result<Artifact> {
    Ok(Artifact {
        path: path.to_path_buf(),
        sha256: sha256_file(path)?,
        deterministic: true,
    })
}

impl RunManifest {
    pub fn new(command: &str, config: &Config) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seeds: vec![config.seed],
            inputs: Vec::new(),
            outputs: Vec::new(),
            notes: serde_json::Map::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        self.inputs.push(artifact(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> anyhow::Result<()> {
        self.outputs.push(artifact(path)?);
        Ok(())
    }

    pub fn timing_output(&mut self, path: &Path) -> anyhow::Result<()> {
        let mut a = artifact(path)?;
        a.deterministic = false;
        self.outputs.push(a);
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) -> anyhow::Result<()> {
        self.notes.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        qpic_core::io::write_json(path, self).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        qpic_core::io::read_json(path).with_context(|| format!("reading manifest {}", path.display()))
    }
}
