//! One JSON file per request, named by the SHA-256 of the canonical URL.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Environment variable that overrides the cache directory.
pub const CACHE_ENV: &str = "IMPACT_BSTS_CACHE";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    /// RFC 3339 time of the original fetch.
    pub fetched_at: String,
    /// Response body exactly as received.
    pub payload: String,
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `$IMPACT_BSTS_CACHE`, else `$XDG_CACHE_HOME/impact-bsts`, else
    /// `$HOME/.cache/impact-bsts`, else `.impact-bsts-cache`.
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var_os(k).filter(|v| !v.is_empty()).map(PathBuf::from);
        let dir = var(CACHE_ENV)
            .or_else(|| var("XDG_CACHE_HOME").map(|p| p.join("impact-bsts")))
            .or_else(|| var("HOME").map(|p| p.join(".cache").join("impact-bsts")))
            .unwrap_or_else(|| PathBuf::from(".impact-bsts-cache"));
        Self::new(dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        let digest = Sha256::digest(key.as_bytes());
        self.dir.join(format!("{}.json", hex::encode(digest)))
    }

    /// Returns the stored entry for `key`. Unreadable or mismatched files
    /// count as misses.
    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        let text = fs::read_to_string(self.path_for(key)).ok()?;
        match serde_json::from_str::<CacheEntry>(&text) {
            Ok(entry) if entry.key == key => Some(entry),
            Ok(_) => None,
            Err(e) => {
                log::warn!("ignoring corrupt cache file for {key}: {e}");
                None
            }
        }
    }

    /// Writes through a temporary file and a rename so readers never see a
    /// partial entry.
    pub fn put(&self, entry: &CacheEntry) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(&entry.key);
        let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(serde_json::to_string(entry)?.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path).inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_key_check() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        assert!(cache.get("a").is_none());
        let entry = CacheEntry {
            key: "a".into(),
            fetched_at: "2024-01-01T00:00:00Z".into(),
            payload: "{\"items\":[]}".into(),
        };
        cache.put(&entry).unwrap();
        assert_eq!(cache.get("a"), Some(entry));
        assert!(cache.get("b").is_none());
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
