//! JSON sidecar written next to every CSV so a run can be repeated.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    pub config_sha256: String,
    /// Full text of the configuration the run used.
    pub config: String,
    pub seeds: Vec<u64>,
    pub methods: Vec<String>,
    pub episodes: Option<usize>,
    pub outputs: Vec<PathBuf>,
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl Manifest {
    pub fn new(args: &[String], config_text: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            args: args.to_vec(),
            config_sha256: config_hash(config_text),
            config: config_text.to_string(),
            seeds: Vec::new(),
            methods: Vec::new(),
            episodes: None,
            outputs: Vec::new(),
        }
    }

    /// `<output>.manifest.json`
    pub fn sidecar_path(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_beside(&self, output: &Path) -> anyhow::Result<PathBuf> {
        let path = Self::sidecar_path(output);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        anyhow::ensure!(
            config_hash(&m.config) == m.config_sha256,
            "manifest {} embeds a config that does not match its hash",
            path.display()
        );
        Ok(m)
    }
}
