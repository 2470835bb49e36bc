use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::worldio::sha256_file;
use crate::Result;

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

/// Provenance of one command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub master_seed: Option<u64>,
    /// Input path to SHA-256; directories hash their manifest file.
    pub inputs: BTreeMap<String, String>,
    pub artifact_version: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: Option<&Path>, master_seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            config: config.map(Path::to_path_buf),
            master_seed,
            inputs: BTreeMap::new(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let target = if path.is_dir() {
            path.join(crate::worldio::MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        self.inputs.insert(path.display().to_string(), sha256_file(&target)?);
        Ok(())
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut f = fs::File::create(dir.join(RUN_MANIFEST_FILE))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}
