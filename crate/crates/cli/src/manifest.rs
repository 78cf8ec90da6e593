//! Run manifests: what was run, on which bytes, with which settings.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputRecord {
    pub role: String,
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub item: String,
    pub error: String,
}

/// Written as `<command>.manifest.json` next to a command's outputs. Holds no
/// timestamps, so identical runs give identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub versions: Versions,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<PathBuf>,
    pub failures: Vec<Failure>,
    pub status: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub intent_cli: &'static str,
    pub intent_core: &'static str,
}

pub fn hash_file(path: &Path) -> Result<(u64, String)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((bytes.len() as u64, hex::encode(Sha256::digest(&bytes))))
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: &impl Serialize) -> Result<Self> {
        Ok(Manifest {
            command: command.to_owned(),
            versions: Versions {
                intent_cli: env!("CARGO_PKG_VERSION"),
                intent_core: intent_core::VERSION,
            },
            seed,
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            failures: Vec::new(),
            status: "ok",
        })
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let (bytes, sha256) = hash_file(path)?;
        self.inputs.push(InputRecord {
            role: role.to_owned(),
            path: path.to_owned(),
            bytes,
            sha256,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_owned());
    }

    pub fn fail(&mut self, item: &str, error: &anyhow::Error) {
        self.failures.push(Failure {
            item: item.to_owned(),
            error: format!("{error:#}"),
        });
        self.status = "failed";
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(format!("{}.manifest.json", self.command));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, b"abc").unwrap();
        let (n, h) = hash_file(&p).unwrap();
        assert_eq!(n, 3);
        assert_eq!(h, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn failure_flips_status() {
        let mut m = Manifest::new("x", 1, &serde_json::json!({})).unwrap();
        assert_eq!(m.status, "ok");
        m.fail("B4", &anyhow::anyhow!("boom"));
        assert_eq!(m.status, "failed");
        assert_eq!(m.failures[0].item, "B4");
    }
}
