//! Reproducibility manifest written next to every run's outputs.
//!
//! No timestamps or absolute host details: two identical runs produce
//! byte-identical manifests.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub complete: bool,
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    let mut f = fs::File::open(path)?;
    io::copy(&mut f, &mut hasher)?;
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Run {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub outputs: Vec<&'static str>,
}

impl Run {
    pub fn new<C: Serialize>(command: &'static str, config: &C, out_dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Run {
            command,
            seed: None,
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            out_dir: out_dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn output(&mut self, name: &'static str) -> PathBuf {
        if !self.outputs.contains(&name) {
            self.outputs.push(name);
        }
        self.out_dir.join(name)
    }

    pub fn write(self, complete: bool) -> anyhow::Result<()> {
        let config_bytes = serde_json::to_vec(&self.config)?;
        let inputs = self
            .inputs
            .iter()
            .map(|p| {
                Ok(FileHash {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<io::Result<Vec<_>>>()?;
        let outputs = self
            .outputs
            .iter()
            .map(|name| {
                Ok(FileHash {
                    path: name.to_string(),
                    sha256: sha256_file(&self.out_dir.join(name))?,
                })
            })
            .collect::<io::Result<Vec<_>>>()?;
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.seed,
            config_sha256: hex(&Sha256::digest(&config_bytes)),
            config: self.config,
            inputs,
            outputs,
            complete,
        };
        let mut json = serde_json::to_vec_pretty(&manifest)?;
        json.push(b'\n');
        fs::write(self.out_dir.join("manifest.json"), json)?;
        Ok(())
    }
}
