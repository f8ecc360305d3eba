//! Provenance record written next to every output file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    /// SHA-256 of each input file, keyed by path.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_time_secs: f64,
}

/// Builder that starts the clock when created.
#[derive(Debug)]
pub struct ManifestBuilder {
    manifest: RunManifest,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: impl Into<String>, args: Vec<String>) -> Self {
        ManifestBuilder {
            manifest: RunManifest {
                command: command.into(),
                args,
                seed: None,
                version: env!("CARGO_PKG_VERSION").to_string(),
                inputs: BTreeMap::new(),
                outputs: Vec::new(),
                wall_time_secs: 0.0,
            },
            started: Instant::now(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.manifest.seed = Some(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest
            .inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.manifest.outputs.push(path.display().to_string());
    }

    pub fn finish(mut self) -> RunManifest {
        self.manifest.wall_time_secs = self.started.elapsed().as_secs_f64();
        self.manifest
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

impl RunManifest {
    /// Write the manifest beside `out` and return its path.
    pub fn write_for(&self, out: &Path) -> Result<PathBuf> {
        let path = manifest_path(out);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_sits_next_to_output() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("series.csv");
        fs::write(&out, "T\n1\n").unwrap();
        let mut b = ManifestBuilder::new("predict", vec!["--c".into(), "0.5".into()]).seed(3);
        b.input(&out).unwrap();
        b.output(&out);
        let m = b.finish();
        let path = m.write_for(&out).unwrap();
        assert_eq!(path, dir.path().join("series.csv.manifest.json"));
        let back: RunManifest = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(back, m);
        // sha256 of "T\n1\n"
        assert_eq!(
            back.inputs.values().next().unwrap(),
            &hex::encode(Sha256::digest(b"T\n1\n"))
        );
    }
}
