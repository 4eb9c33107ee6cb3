//! Run reports: a JSON record of one command invocation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::files;

#[derive(Debug, Clone, Serialize)]
pub struct Input {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub inputs: Vec<Input>,
    pub outcome: String,
    pub winner: Option<String>,
    pub artifacts: BTreeMap<String, Value>,
    /// Work counters. Wall-clock time is left out so that reports are
    /// reproducible byte for byte.
    pub stats: BTreeMap<String, u64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunReport {
    pub fn new(command: Vec<String>) -> Self {
        RunReport { command, ..Default::default() }
    }

    /// Reads an input file and records its hash.
    pub fn read_input(&mut self, role: &str, path: &Path) -> Result<String, CliError> {
        let text = files::read(path)?;
        self.inputs.push(Input {
            role: role.into(),
            path: path.display().to_string(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(text)
    }

    pub fn artifact(&mut self, name: &str, value: impl Serialize) {
        self.artifacts.insert(name.into(), serde_json::to_value(value).expect("serializable"));
    }

    pub fn stat(&mut self, name: &str, value: usize) {
        self.stats.insert(name.into(), value as u64);
    }

    pub fn to_json(&self) -> String {
        files::to_json(self)
    }
}
