use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gentac_core::backbone::sha256_hex;
use serde::Serialize;

use crate::config::RunConfig;

/// Object id of `bytes` in the style of a git blob (SHA-256 object format).
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut buf = format!("blob {}\0", bytes.len()).into_bytes();
    buf.extend_from_slice(bytes);
    sha256_hex(&buf)
}

/// Files read by a command, keyed by role and name.
#[derive(Debug, Default)]
pub struct Inputs {
    entries: BTreeMap<String, String>,
    paths: Vec<PathBuf>,
}

impl Inputs {
    /// Reads and records one file.
    pub fn read(&mut self, role: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.entries.insert(format!("{role}/{name}"), blob_hash(&bytes));
        self.paths.push(path.canonicalize()?);
        Ok(bytes)
    }

    pub fn read_string(&mut self, role: &str, path: &Path) -> Result<String> {
        String::from_utf8(self.read(role, path)?).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    /// Tree-style hash over the sorted `name hash` entries.
    pub fn hash(&self) -> String {
        let listing: String = self.entries.iter().map(|(k, v)| format!("{k}\0{v}\n")).collect();
        sha256_hex(listing.as_bytes())
    }

    /// Fails if writing `path` would overwrite an input.
    pub fn guard(&self, path: &Path) -> Result<()> {
        if let Ok(p) = path.canonicalize() {
            if self.paths.contains(&p) {
                bail!("refusing to overwrite input {}", path.display());
            }
        }
        Ok(())
    }
}

/// Files written by a command, hashed as they are written.
#[derive(Debug, Default)]
pub struct Outputs {
    files: BTreeMap<String, String>,
}

impl Outputs {
    pub fn write(&mut self, inputs: &Inputs, path: &Path, bytes: &[u8]) -> Result<()> {
        inputs.guard(path)?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.files.insert(name, blob_hash(bytes));
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub config_hash: String,
    pub seed: u64,
    pub checkpoint_hash: Option<String>,
    pub input_hash: String,
    pub inputs: &'a BTreeMap<String, String>,
    pub outputs: &'a BTreeMap<String, String>,
    pub config: &'a RunConfig,
}

pub fn config_hash(cfg: &RunConfig) -> String {
    sha256_hex(serde_json::to_string(cfg).expect("config serializes").as_bytes())
}

/// Writes the manifest to `path`.
pub fn write_manifest(
    path: &Path,
    command: &str,
    cfg: &RunConfig,
    checkpoint_hash: Option<String>,
    inputs: &Inputs,
    outputs: &Outputs,
) -> Result<()> {
    let m = Manifest {
        command,
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        checkpoint_hash,
        input_hash: inputs.hash(),
        inputs: &inputs.entries,
        outputs: &outputs.files,
        config: cfg,
    };
    inputs.guard(path)?;
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `<file>.manifest.json` next to a single-file output.
pub fn beside(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_header() {
        assert_eq!(blob_hash(b""), sha256_hex(b"blob 0\0"));
        assert_ne!(blob_hash(b"a"), sha256_hex(b"a"));
    }

    #[test]
    fn input_hash_ignores_read_order() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        std::fs::write(&a, "1").unwrap();
        std::fs::write(&b, "2").unwrap();
        let mut x = Inputs::default();
        x.read("data", &a).unwrap();
        x.read("data", &b).unwrap();
        let mut y = Inputs::default();
        y.read("data", &b).unwrap();
        y.read("data", &a).unwrap();
        assert_eq!(x.hash(), y.hash());
        let mut z = Inputs::default();
        z.read("data", &a).unwrap();
        assert_ne!(x.hash(), z.hash());
        assert!(x.guard(&a).is_err());
        assert!(x.guard(&dir.path().join("c.json")).is_ok());
    }

    #[test]
    fn manifest_path() {
        assert_eq!(beside(Path::new("out/m.ckpt")), PathBuf::from("out/m.ckpt.manifest.json"));
    }
}
