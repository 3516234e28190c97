//! Single sink for every artifact of a run, so the manifest lists exactly
//! what was written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputRecord {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Provenance of one run. Apart from `wall_clock_seconds` and
/// `started_unix`, the manifest is a function of the config and the tool.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_path: Option<String>,
    pub config_sha256: String,
    pub schema_version: Option<u32>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    /// Set when the run failed after the output directory was opened.
    pub error: Option<String>,
    pub outputs: Vec<OutputRecord>,
}

pub struct Emitter {
    dir: PathBuf,
    outputs: Vec<OutputRecord>,
}

impl Emitter {
    /// Creates `dir` if needed and checks that it accepts files.
    pub fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let probe = dir.join(".ptflow-write-probe");
        fs::write(&probe, b"").and_then(|_| fs::remove_file(&probe)).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), outputs: Vec::new() })
    }

    #[cfg(test)]
    pub fn outputs(&self) -> &[OutputRecord] {
        &self.outputs
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> CliResult<()> {
        assert!(name != MANIFEST_NAME && !self.outputs.iter().any(|o| o.path == name), "artifact {name} emitted twice");
        let path = self.dir.join(name);
        fs::write(&path, data).map_err(|e| CliError::io(&path, e))?;
        log::info!("wrote {}", path.display());
        self.outputs.push(OutputRecord { path: name.to_string(), bytes: data.len(), sha256: sha256_hex(data) });
        Ok(())
    }

    pub fn text(&mut self, name: &str, s: &str) -> CliResult<()> {
        self.bytes(name, s.as_bytes())
    }

    /// Pretty JSON with a trailing newline; key order follows the struct
    /// declaration, and maps are sorted.
    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, v: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(v).expect("artifact types serialise");
        s.push('\n');
        self.text(name, &s)
    }

    /// Writes the manifest last; it is not listed among its own outputs.
    pub fn finish(self, mut manifest: RunManifest) -> CliResult<RunManifest> {
        manifest.outputs = self.outputs;
        let path = self.dir.join(MANIFEST_NAME);
        let mut s = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        s.push('\n');
        fs::write(&path, s).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn records_match_files() {
        let dir = std::env::temp_dir().join(format!("ptflow-emit-{}", std::process::id()));
        let mut em = Emitter::new(&dir).unwrap();
        em.text("a.csv", "x\n1\n").unwrap();
        em.json("b.json", &[1, 2]).unwrap();
        for o in em.outputs() {
            let data = fs::read(dir.join(&o.path)).unwrap();
            assert_eq!(sha256_hex(&data), o.sha256);
            assert_eq!(data.len(), o.bytes);
        }
        fs::remove_dir_all(&dir).unwrap();
    }
}
