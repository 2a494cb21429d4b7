use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{sha256_hex, RunConfig};
use crate::error::Result;
use crate::io;

/// A run's output directory. Files written through it are listed with their
/// SHA-256 in `manifest.json`, next to the resolved `config.json` and `seed`.
pub struct OutputDir {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    files: &'a BTreeMap<String, String>,
}

impl OutputDir {
    pub fn new(root: &Path) -> Self {
        OutputDir { root: root.to_path_buf(), files: BTreeMap::new() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        io::write_bytes(&self.path(name), bytes)?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &io::json_bytes(value))
    }

    pub fn finish(mut self, command: &str, config: &RunConfig) -> Result<BTreeMap<String, String>> {
        self.write_json("config.json", config)?;
        self.write("seed", format!("{}\n", config.seed).as_bytes())?;
        let hash = config.hash();
        let manifest = Manifest { command, config_hash: &hash, files: &self.files };
        io::write_bytes(&self.path("manifest.json"), &io::json_bytes(&manifest))?;
        Ok(self.files)
    }
}
