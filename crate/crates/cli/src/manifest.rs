use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use priming::lexicon::LexiconPaths;

use crate::config::Config;
use crate::error::{io_err, CliError};
use crate::files::{sha256_hex, write_atomic};

pub const MANIFEST_SCHEMA: &str = "priming-run/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub config_hash: String,
    pub seed: u64,
    pub lexicon_fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorer: Option<String>,
    pub conditions: Vec<String>,
    pub started_at: u64,
    pub finished_at: u64,
    pub artifacts: Vec<Artifact>,
    /// The resolved configuration; enough to repeat the run.
    pub config: Config,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Digest over the seven lexicon files, in a fixed order.
pub fn lexicon_fingerprint(dir: &Path) -> Result<String, CliError> {
    let paths = LexiconPaths::in_dir(dir);
    let mut h = Sha256::new();
    for p in paths.all() {
        let bytes = fs::read(p).map_err(io_err(p))?;
        let name = p.file_name().unwrap_or_default().to_string_lossy();
        h.update(name.as_bytes());
        h.update([0]);
        h.update(sha256_hex(&bytes).as_bytes());
        h.update(b"\n");
    }
    Ok(hex::encode(h.finalize()))
}

pub fn artifact(out_dir: &Path, path: &Path) -> Result<Artifact, CliError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let rel = path.strip_prefix(out_dir).unwrap_or(path);
    Ok(Artifact {
        path: rel.to_string_lossy().replace('\\', "/"),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

impl RunManifest {
    /// A manifest for `config`, which must already be resolved.
    pub fn new(config: &Config, started_at: u64) -> Result<Self, CliError> {
        Ok(Self {
            schema: MANIFEST_SCHEMA.into(),
            config_hash: sha256_hex(config.canonical_json().as_bytes()),
            seed: config.seed,
            lexicon_fingerprint: lexicon_fingerprint(&config.lexicon.dir)?,
            scorer: None,
            conditions: config.conditions.iter().map(|c| c.name.label()).collect(),
            started_at,
            finished_at: started_at,
            artifacts: Vec::new(),
            config: config.clone(),
        })
    }

    pub fn add_artifacts(&mut self, out_dir: &Path, paths: &[PathBuf]) -> Result<(), CliError> {
        for p in paths {
            self.artifacts.push(artifact(out_dir, p)?);
        }
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let m: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("manifest {}: {e}", path.display())))?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(CliError::Usage(format!(
                "manifest {}: unsupported schema {}",
                path.display(),
                m.schema
            )));
        }
        Ok(m)
    }

    /// Check that the manifest's config and lexicon are what they claim.
    pub fn verify_inputs(&self) -> Result<(), CliError> {
        let hash = sha256_hex(self.config.canonical_json().as_bytes());
        if hash != self.config_hash {
            return Err(CliError::Validation(format!(
                "manifest config hash {} does not match its config ({hash})",
                self.config_hash
            )));
        }
        let fp = lexicon_fingerprint(&self.config.lexicon.dir)?;
        if fp != self.lexicon_fingerprint {
            return Err(CliError::Validation(format!(
                "lexicon at {} has changed since the manifest was written",
                self.config.lexicon.dir.display()
            )));
        }
        Ok(())
    }

    pub fn write(&mut self, out_dir: &Path) -> Result<PathBuf, CliError> {
        self.finished_at = unix_now();
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
