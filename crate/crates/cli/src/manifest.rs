//! Run manifests, input hashing and atomic file output.

use std::fs;
use std::path::{Path, PathBuf};

use loopmesh::train::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL_NAME: &str = "loopmesh";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputHash {
    pub fn of(path: &Path) -> CliResult<Self> {
        Ok(InputHash {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Everything needed to reproduce a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: TrainConfig,
    pub seed: u64,
    pub holdout: Vec<String>,
    pub inputs: Vec<InputHash>,
    /// Output file names, relative to the run directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        config: &TrainConfig,
        holdout: &[String],
        inputs: Vec<InputHash>,
        outputs: &[&str],
    ) -> Self {
        RunManifest {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            config: config.clone(),
            seed: config.seed,
            holdout: holdout.to_vec(),
            inputs,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| loopmesh::Error::from(e).in_file(path).into())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    /// Re-hash every recorded input and fail on the first mismatch.
    pub fn verify_inputs(&self) -> CliResult<()> {
        for input in &self.inputs {
            let found = sha256_file(&input.path)?;
            if found != input.sha256 {
                return Err(CliError::InputChanged {
                    path: input.path.clone(),
                    expected: input.sha256.clone(),
                    found,
                });
            }
        }
        Ok(())
    }

    /// Hash of the config and input contents; names a cached run directory.
    pub fn cache_key(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.config).expect("config serializes"));
        for input in &self.inputs {
            h.update(input.sha256.as_bytes());
        }
        hex::encode(h.finalize())[..16].to_string()
    }
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Write via a sibling temp file and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"abc").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"abc");
        assert!(!dir.path().join("sub/out.txt.tmp").exists());
    }

    #[test]
    fn verify_detects_changed_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("in.dat");
        fs::write(&p, "a").unwrap();
        let m = RunManifest::new(
            &TrainConfig::default(),
            &[],
            vec![InputHash::of(&p).unwrap()],
            &[],
        );
        m.verify_inputs().unwrap();
        fs::write(&p, "b").unwrap();
        let err = m.verify_inputs().unwrap_err();
        assert!(matches!(err, CliError::InputChanged { .. }));
    }

    #[test]
    fn cache_key_tracks_config() {
        let a = RunManifest::new(&TrainConfig::default(), &[], vec![], &[]);
        let mut cfg = TrainConfig::default();
        cfg.nodes += 1;
        let b = RunManifest::new(&cfg, &[], vec![], &[]);
        assert_ne!(a.cache_key(), b.cache_key());
        assert_eq!(a.cache_key(), a.clone().cache_key());
    }
}
