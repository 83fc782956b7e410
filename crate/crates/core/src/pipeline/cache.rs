use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{read_json, write_file, PipelineError};

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(hash_bytes(&bytes))
}

/// What a finished stage consumed and produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub key: String,
    /// Output file name (relative to the output directory) → content hash.
    pub outputs: BTreeMap<String, String>,
}

/// Per-stage records under `<out>/.cache`. A stage is skipped when its key
/// (parameters plus input hashes) matches and every recorded output is
/// still present with the recorded hash.
#[derive(Debug, Clone)]
pub struct StageCache {
    out: PathBuf,
    enabled: bool,
}

impl StageCache {
    pub fn new(out: &Path, enabled: bool) -> Self {
        StageCache {
            out: out.to_path_buf(),
            enabled,
        }
    }

    fn record_path(&self, stage: &str) -> PathBuf {
        self.out.join(".cache").join(format!("{stage}.json"))
    }

    pub fn key<P: Serialize>(stage: &str, params: &P, inputs: &[&Path]) -> Result<String, PipelineError> {
        let mut h = Sha256::new();
        h.update(stage.as_bytes());
        h.update(serde_json::to_vec(params).expect("parameters serialize"));
        for p in inputs {
            h.update(hash_file(p)?.as_bytes());
        }
        Ok(hex::encode(h.finalize()))
    }

    pub fn lookup(&self, stage: &str, key: &str) -> Option<StageRecord> {
        if !self.enabled {
            return None;
        }
        let rec: StageRecord = read_json(&self.record_path(stage)).ok()?;
        if rec.key != key {
            return None;
        }
        let intact = rec
            .outputs
            .iter()
            .all(|(name, hash)| hash_file(&self.out.join(name)).is_ok_and(|h| &h == hash));
        intact.then_some(rec)
    }

    pub fn store(&self, stage: &str, key: &str, outputs: &[&str]) -> Result<StageRecord, PipelineError> {
        let mut rec = StageRecord {
            stage: stage.to_string(),
            key: key.to_string(),
            outputs: BTreeMap::new(),
        };
        for name in outputs {
            rec.outputs.insert(name.to_string(), hash_file(&self.out.join(name))?);
        }
        if self.enabled {
            let json = serde_json::to_vec_pretty(&rec).expect("record serializes");
            write_file(&self.record_path(stage), &json)?;
        }
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            hash_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn hit_requires_key_and_intact_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        std::fs::write(&input, "x").unwrap();
        std::fs::write(dir.path().join("out.txt"), "y").unwrap();
        let cache = StageCache::new(dir.path(), true);
        let key = StageCache::key("fit", &16, &[&input]).unwrap();
        assert!(cache.lookup("fit", &key).is_none());
        cache.store("fit", &key, &["out.txt"]).unwrap();
        assert!(cache.lookup("fit", &key).is_some());

        let other = StageCache::key("fit", &17, &[&input]).unwrap();
        assert!(cache.lookup("fit", &other).is_none());
        std::fs::write(dir.path().join("out.txt"), "z").unwrap();
        assert!(cache.lookup("fit", &key).is_none());
        assert!(StageCache::new(dir.path(), false).lookup("fit", &key).is_none());
    }
}
