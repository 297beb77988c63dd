use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub sha256: String,
    pub bytes: u64,
}

/// What one command recorded: derived seeds and the artifacts it wrote.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub seeds: BTreeMap<String, u64>,
    pub artifacts: BTreeMap<String, ArtifactRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub timings_s: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub run_id: String,
    pub master_seed: u64,
    pub reproducible: bool,
    pub config: RunConfig,
    pub stages: BTreeMap<String, StageRecord>,
}

/// Output directory of one run; every file written through it is hashed
/// into the manifest.
pub struct RunDir {
    root: PathBuf,
    manifest: Manifest,
    stage: String,
    reproducible: bool,
}

impl RunDir {
    /// Opens `out/<run-id>`. A `pipeline` run starts a fresh manifest; single
    /// stages add themselves to an existing one.
    pub fn open(config: &RunConfig, stage: &str, fresh: bool) -> anyhow::Result<Self> {
        let run_id = config.run_id();
        let root = config.output_dir.join(&run_id);
        std::fs::create_dir_all(&root)
            .with_context(|| format!("cannot create {}", root.display()))?;
        let path = root.join(MANIFEST);
        let mut stages = BTreeMap::new();
        if !fresh {
            if let Ok(text) = std::fs::read_to_string(&path) {
                if let Ok(old) = serde_json::from_str::<Manifest>(&text) {
                    stages = old.stages;
                }
            }
        }
        stages.insert(stage.to_string(), StageRecord::default());
        Ok(RunDir {
            manifest: Manifest {
                tool: "losstack".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                run_id,
                master_seed: config.seed,
                reproducible: config.reproducible,
                config: config.clone(),
                stages,
            },
            root,
            stage: stage.into(),
            reproducible: config.reproducible,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn record(&mut self) -> &mut StageRecord {
        self.manifest
            .stages
            .get_mut(&self.stage)
            .expect("stage inserted on open")
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.record().seeds.insert(name.into(), value);
    }

    pub fn timing(&mut self, name: &str, seconds: f64) {
        if !self.reproducible {
            self.record().timings_s.insert(name.into(), seconds);
        }
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        let sha256 = format!("{:x}", Sha256::digest(bytes));
        self.record().artifacts.insert(
            rel.into(),
            ArtifactRecord {
                sha256,
                bytes: bytes.len() as u64,
            },
        );
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.write_bytes(rel, &text)
    }

    /// Renders into memory with `f`, then writes and hashes the result.
    pub fn write_with<F>(&mut self, rel: &str, f: F) -> anyhow::Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> losstack::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_bytes(rel, &buf)
    }

    pub fn finish(self) -> anyhow::Result<PathBuf> {
        let path = self.root.join(MANIFEST);
        let mut text = serde_json::to_vec_pretty(&self.manifest)?;
        text.push(b'\n');
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
