//! `manifest.json`: what a run produced and how to check it.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// A module returned an error; see `error`.
    Failed,
    /// The run finished but a diagnostic invariant was broken.
    Violation,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Ok => 0,
            Self::Failed => 3,
            Self::Violation => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// sha256 of the canonical scenario text without the output section.
    pub config_hash: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub violations: Vec<String>,
    /// Directory holding the trajectory snapshots, if any were written.
    pub snapshot_dir: Option<String>,
    pub artifacts: Vec<Artifact>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> io::Result<(String, u64)> {
    let bytes = fs::read(path)?;
    Ok((sha256_hex(&bytes), bytes.len() as u64))
}

fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            config_hash,
            started_unix: unix_now(),
            finished_unix: 0.0,
            status: RunStatus::Ok,
            error: None,
            violations: Vec::new(),
            snapshot_dir: None,
            artifacts: Vec::new(),
        }
    }

    /// Records a file that already exists under `root`.
    pub fn add_artifact(&mut self, root: &Path, path: &Path) -> io::Result<()> {
        let (sha256, bytes) = file_sha256(path)?;
        self.artifacts.push(Artifact {
            path: relative(root, path),
            sha256,
            bytes,
        });
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is plain data")
    }

    pub fn write(&self, root: &Path) -> io::Result<PathBuf> {
        let path = root.join(MANIFEST_FILE);
        fs::write(&path, self.to_json() + "\n")?;
        Ok(path)
    }

    pub fn read(root: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(root.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArtifactProblem {
    Missing(String),
    Modified(String),
}

/// Recomputes every listed checksum under `root`.
pub fn verify_manifest(root: &Path, m: &RunManifest) -> Vec<ArtifactProblem> {
    m.artifacts
        .iter()
        .filter_map(|a| match file_sha256(&root.join(&a.path)) {
            Err(_) => Some(ArtifactProblem::Missing(a.path.clone())),
            Ok((h, n)) if h != a.sha256 || n != a.bytes => Some(ArtifactProblem::Modified(a.path.clone())),
            Ok(_) => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        fs::create_dir_all(root.join("sub")).unwrap();
        fs::write(root.join("a.csv"), "x\n1\n").unwrap();
        fs::write(root.join("sub/b.bin"), [1u8, 2, 3]).unwrap();
        let mut m = RunManifest::new(sha256_hex(b"cfg"));
        m.add_artifact(root, &root.join("a.csv")).unwrap();
        m.add_artifact(root, &root.join("sub/b.bin")).unwrap();
        assert_eq!(m.artifacts[1].path, "sub/b.bin");
        m.write(root).unwrap();
        let back = RunManifest::read(root).unwrap();
        assert_eq!(back, m);
        assert!(verify_manifest(root, &back).is_empty());

        fs::write(root.join("a.csv"), "x\n2\n").unwrap();
        fs::remove_file(root.join("sub/b.bin")).unwrap();
        assert_eq!(
            verify_manifest(root, &back),
            vec![
                ArtifactProblem::Modified("a.csv".into()),
                ArtifactProblem::Missing("sub/b.bin".into())
            ]
        );
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunStatus::Ok.exit_code(), 0);
        assert_eq!(RunStatus::Failed.exit_code(), 3);
        assert_eq!(RunStatus::Violation.exit_code(), 4);
    }
}
