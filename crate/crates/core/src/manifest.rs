//! Run manifests: resolved configuration plus input digests, written beside
//! every artifact so a run can be reproduced and verified byte for byte.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunManifest {
    pub command: String,
    pub seeds: Vec<u64>,
    /// Resolved configuration as serialized TOML, so defaults are explicit.
    pub config: String,
    /// sha256 of each input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    /// sha256 of each produced artifact.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

impl RunManifest {
    pub fn new(command: &str, seeds: Vec<u64>, config: String) -> Self {
        RunManifest {
            command: command.to_string(),
            seeds,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> io::Result<()> {
        self.outputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Writes `<artifact>.manifest.json` next to the artifact.
    pub fn write_beside(&self, artifact: &Path) -> io::Result<()> {
        let mut name = artifact.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        let path = artifact.with_file_name(name);
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = dir.path().join("out.tsv");
        std::fs::write(&artifact, "jump\tJUMP\n").unwrap();
        let mut m1 = RunManifest::new("gen-scan", vec![7], "seed = 7".into());
        m1.add_output(&artifact).unwrap();
        m1.write_beside(&artifact).unwrap();
        let first = std::fs::read(dir.path().join("out.tsv.manifest.json")).unwrap();
        let mut m2 = RunManifest::new("gen-scan", vec![7], "seed = 7".into());
        m2.add_output(&artifact).unwrap();
        m2.write_beside(&artifact).unwrap();
        let second = std::fs::read(dir.path().join("out.tsv.manifest.json")).unwrap();
        assert_eq!(first, second);
        assert_eq!(m1, m2);
    }
}
