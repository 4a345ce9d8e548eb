use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{output_err, CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance record written with every run. It contains nothing
/// time-dependent, so identical reruns produce identical manifests.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub core_version: String,
    /// SHA-256 of the saved `config.toml`.
    pub config_hash: String,
    pub seed: u64,
    /// SHA-256 of every input file read by the run, keyed by path.
    pub inputs: BTreeMap<String, String>,
    /// Files written by the run.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config_toml: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: windfreq_core::VERSION.to_string(),
            config_hash: sha256_hex(config_toml.as_bytes()),
            seed,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> CliResult<()> {
        let bytes =
            std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read input {}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join("manifest.toml");
        let text = toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize manifest: {e}")))?;
        std::fs::write(&path, text).map_err(output_err(&path))
    }
}
