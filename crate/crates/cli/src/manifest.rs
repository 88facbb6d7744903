use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance record written next to every run's outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub name: String,
    pub command: String,
    pub method: Option<String>,
    pub seed: u64,
    pub config: Config,
    /// Input file name to hex SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub stats: BTreeMap<String, Value>,
    pub created: String,
    pub tool_version: String,
}

impl Manifest {
    pub fn new(name: &str, command: &str, config: &Config) -> Self {
        Manifest {
            name: name.to_string(),
            command: command.to_string(),
            method: None,
            seed: config.seed,
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            stats: BTreeMap::new(),
            created: chrono::Utc::now().to_rfc3339(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs
            .insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn stat(&mut self, key: &str, value: impl Into<Value>) {
        self.stats.insert(key.to_string(), value.into());
    }
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let mut f = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// A run directory that refuses to overwrite a finished run unless forced.
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn create(out: &Path, name: &str, force: bool) -> Result<Self, CliError> {
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(CliError::Usage(format!("invalid run name `{name}`")));
        }
        let path = out.join(name);
        if path.join(MANIFEST_FILE).exists() && !force {
            return Err(CliError::Usage(format!(
                "{} already holds a finished run; pass --force to overwrite",
                path.display()
            )));
        }
        fs::create_dir_all(&path)?;
        Ok(RunDir { path })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    /// Writes the manifest last, marking the run complete.
    pub fn finish(&self, manifest: &Manifest) -> Result<(), CliError> {
        let text =
            serde_json::to_string_pretty(manifest).map_err(|e| CliError::Usage(e.to_string()))?;
        fs::write(self.file(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }
}
