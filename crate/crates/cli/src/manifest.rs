use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the effective configuration as canonical JSON.
    pub config_digest: String,
    pub input_files: Vec<String>,
    pub input_digests: Vec<String>,
    pub outputs: Vec<OutputDigest>,
    pub tool_version: String,
    pub timestamp: String,
}

/// Collects inputs and outputs while a command runs.
pub struct Recorder {
    command: String,
    out_dir: PathBuf,
    config_digest: String,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn new(command: &str, out_dir: &Path, config: &impl Serialize) -> anyhow::Result<Self> {
        // serde_json::Value keeps object keys sorted, which makes the digest canonical
        let canonical = serde_json::to_vec(&serde_json::to_value(config)?)?;
        Ok(Recorder {
            command: command.to_string(),
            out_dir: out_dir.to_path_buf(),
            config_digest: sha256_hex(&canonical),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output_path(&mut self, name: &str) -> PathBuf {
        let p = self.out_dir.join(name);
        self.outputs.push(p.clone());
        p
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> anyhow::Result<PathBuf> {
        let p = self.output_path(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn finish(self) -> anyhow::Result<PathBuf> {
        let mut input_digests = Vec::with_capacity(self.inputs.len());
        for p in &self.inputs {
            input_digests.push(file_digest(p)?);
        }
        let mut outputs = Vec::with_capacity(self.outputs.len());
        for p in &self.outputs {
            outputs.push(OutputDigest {
                path: p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
                sha256: file_digest(p)?,
            });
        }
        let manifest = RunManifest {
            command: self.command.clone(),
            config_digest: self.config_digest,
            input_files: self.inputs.iter().map(|p| p.display().to_string()).collect(),
            input_digests,
            outputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        };
        let path = self.out_dir.join(format!("{}.manifest.json", self.command));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn config_digest_ignores_key_order() {
        let dir = tempfile::tempdir().unwrap();
        let a: serde_json::Value = serde_json::from_str(r#"{"b":1,"a":2}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"a":2,"b":1}"#).unwrap();
        let ra = Recorder::new("x", dir.path(), &a).unwrap();
        let rb = Recorder::new("x", dir.path(), &b).unwrap();
        assert_eq!(ra.config_digest, rb.config_digest);
    }
}
