use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use torusnf::Result;

use crate::config::RunConfig;

pub const FILE: &str = "run.json";

/// `run.json` in a run directory. The only file of a run that holds
/// wall-times; everything it checksums is deterministic.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub stages: BTreeMap<String, Stage>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    /// Output path (relative to the run directory) to SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(config: RunConfig) -> Self {
        RunManifest {
            tool: "torusnf".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            stages: BTreeMap::new(),
        }
    }

    pub fn read(dir: &Path) -> Result<Option<RunManifest>> {
        let p = dir.join(FILE);
        if !p.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_str(&std::fs::read_to_string(p)?)?))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(FILE), self)
    }

    pub fn record(&mut self, stage: &str, dir: &Path, outputs: &[&str], wall_time_s: f64) -> Result<()> {
        let mut sums = BTreeMap::new();
        for o in outputs {
            sums.insert(o.to_string(), checksum(&dir.join(o))?);
        }
        self.stages.insert(stage.into(), Stage { outputs: sums, wall_time_s });
        Ok(())
    }
}

/// SHA-256 of a file, or of a directory's files in name order (name and
/// bytes of each).
pub fn checksum(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut names: Vec<_> =
            std::fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
        names.sort();
        for p in names {
            h.update(p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default().as_bytes());
            h.update(std::fs::read(&p)?);
        }
    } else {
        h.update(std::fs::read(path)?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}
