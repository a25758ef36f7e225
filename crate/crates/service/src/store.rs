//! Filesystem document store. Every document lives in its own file and is
//! replaced by writing a temporary file in the same directory and renaming
//! it over the old one, so readers see either the old or the new document.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Collection {
    Networks,
    Runs,
}

impl Collection {
    fn dir(self) -> &'static str {
        match self {
            Collection::Networks => "networks",
            Collection::Runs => "runs",
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no document `{0}`")]
    NotFound(String),
    #[error("`{0}` is not a valid id (use 1-64 letters, digits, `-` or `_`)")]
    InvalidId(String),
    #[error("document `{id}` is corrupt: {message}")]
    Corrupt { id: String, message: String },
    #[error("storage unavailable: {0}")]
    Unavailable(#[from] io::Error),
}

/// A stored network: the canonical text plus the version that wrote it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versioned {
    pub version: u64,
    pub document: String,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    locks: Mutex<HashMap<(Collection, String), Arc<Mutex<()>>>>,
}

pub fn check_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for collection in [Collection::Networks, Collection::Runs] {
            fs::create_dir_all(root.join(collection.dir()))?;
        }
        Ok(Store { root, locks: Mutex::new(HashMap::new()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, collection: Collection, id: &str) -> PathBuf {
        self.root.join(collection.dir()).join(format!("{id}.json"))
    }

    fn lock(&self, collection: Collection, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry((collection, id.to_string())).or_default().clone()
    }

    fn write_atomic(&self, collection: Collection, id: &str, bytes: &[u8]) -> Result<(), StoreError> {
        let dir = self.root.join(collection.dir());
        let mut temp = NamedTempFile::new_in(&dir)?;
        temp.write_all(bytes)?;
        temp.as_file().sync_all()?;
        temp.persist(self.path(collection, id)).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn read(&self, collection: Collection, id: &str) -> Result<Vec<u8>, StoreError> {
        check_id(id)?;
        match fs::read(self.path(collection, id)) {
            Ok(bytes) => Ok(bytes),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(StoreError::NotFound(id.to_string())),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes `bytes` as the whole document; writes to one id are serialized.
    pub fn write(&self, collection: Collection, id: &str, bytes: &[u8]) -> Result<(), StoreError> {
        check_id(id)?;
        let lock = self.lock(collection, id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        self.write_atomic(collection, id, bytes)
    }

    pub fn delete(&self, collection: Collection, id: &str) -> Result<(), StoreError> {
        check_id(id)?;
        let lock = self.lock(collection, id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        match fs::remove_file(self.path(collection, id)) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(StoreError::NotFound(id.to_string())),
            Err(e) => Err(e.into()),
        }
    }

    /// Ids in the collection, sorted. Temporary files are ignored.
    pub fn list(&self, collection: Collection) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(self.root.join(collection.dir()))? {
            let name = entry?.file_name();
            let Some(id) = name.to_str().and_then(|n| n.strip_suffix(".json")) else { continue };
            if check_id(id).is_ok() {
                ids.push(id.to_string());
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn get_network(&self, id: &str) -> Result<Versioned, StoreError> {
        let bytes = self.read(Collection::Networks, id)?;
        serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt { id: id.to_string(), message: e.to_string() })
    }

    /// Stores `document` under the next version and returns that version.
    /// A corrupt predecessor is overwritten.
    pub fn put_network(&self, id: &str, document: String) -> Result<u64, StoreError> {
        check_id(id)?;
        let lock = self.lock(Collection::Networks, id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let version = match self.get_network(id) {
            Ok(old) => old.version + 1,
            Err(StoreError::NotFound(_) | StoreError::Corrupt { .. }) => 1,
            Err(e) => return Err(e),
        };
        let bytes = serde_json::to_vec(&Versioned { version, document }).expect("envelope serialization is infallible");
        self.write_atomic(Collection::Networks, id, &bytes)?;
        Ok(version)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_restricted() {
        assert!(check_id("plant-1_b").is_ok());
        for bad in ["", "../x", "a/b", "a.json", &"x".repeat(65)] {
            assert!(check_id(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn versions_count_up() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert_eq!(store.put_network("a", "{}".into()).unwrap(), 1);
        assert_eq!(store.put_network("a", "{ }".into()).unwrap(), 2);
        assert_eq!(store.get_network("a").unwrap(), Versioned { version: 2, document: "{ }".into() });
        assert_eq!(store.list(Collection::Networks).unwrap(), ["a"]);
        store.delete(Collection::Networks, "a").unwrap();
        assert!(matches!(store.get_network("a"), Err(StoreError::NotFound(_))));
    }

    #[test]
    fn corrupt_documents_are_reported_by_id() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        fs::write(dir.path().join("networks/bad.json"), b"{\"version\": 1, \"docu").unwrap();
        match store.get_network("bad") {
            Err(StoreError::Corrupt { id, .. }) => assert_eq!(id, "bad"),
            other => panic!("{other:?}"),
        }
    }
}
