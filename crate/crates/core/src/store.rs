//! Append-only, line-delimited JSON record store.
//!
//! One record per line. Records are never rewritten; a record whose key is
//! already present is refused. Loading reports the 1-based line number of
//! the first malformed line.

use std::collections::HashSet;
use std::fmt::Debug;
use std::fs::{File, OpenOptions};
use std::hash::Hash;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub trait StoreRecord: Serialize + DeserializeOwned + Clone {
    type Key: Eq + Hash + Clone + Debug;

    fn key(&self) -> Self::Key;
}

#[derive(Debug)]
pub struct LineStore<R: StoreRecord> {
    path: Option<PathBuf>,
    records: Vec<R>,
    keys: HashSet<R::Key>,
}

impl<R: StoreRecord> Default for LineStore<R> {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl<R: StoreRecord> LineStore<R> {
    /// A store that is never written to disk.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            records: Vec::new(),
            keys: HashSet::new(),
        }
    }

    /// Creates (or truncates) the file at `path` and returns an empty store
    /// backed by it.
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        File::create(path.as_ref())?;
        Ok(Self {
            path: Some(path.as_ref().to_path_buf()),
            ..Self::in_memory()
        })
    }

    /// Loads every record in `path`; subsequent appends go to the same file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut store = Self::parse(&text)?;
        store.path = Some(path.as_ref().to_path_buf());
        Ok(store)
    }

    /// Opens `path`, creating an empty file when it does not exist yet.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        if path.as_ref().exists() {
            Self::load(path)
        } else {
            Self::create(path)
        }
    }

    /// Parses store text without attaching a file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut store = Self::in_memory();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: R = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                reason: e.to_string(),
            })?;
            if !store.keys.insert(record.key()) {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!("duplicate key {:?}", record.key()),
                });
            }
            store.records.push(record);
        }
        Ok(store)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> &[R] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, key: &R::Key) -> bool {
        self.keys.contains(key)
    }

    pub fn get(&self, key: &R::Key) -> Option<&R> {
        if !self.contains(key) {
            return None;
        }
        self.records.iter().find(|r| &r.key() == key)
    }

    /// Durably appends one record, refusing duplicate keys.
    pub fn append(&mut self, record: R) -> Result<()> {
        let key = record.key();
        if self.keys.contains(&key) {
            return Err(Error::Conflict(format!("{key:?}")));
        }
        if let Some(path) = &self.path {
            let mut line = serde_json::to_string(&record).expect("records always serialize");
            line.push('\n');
            let mut file = OpenOptions::new().append(true).create(true).open(path)?;
            file.write_all(line.as_bytes())?;
            file.sync_data()?;
        }
        self.keys.insert(key);
        self.records.push(record);
        Ok(())
    }

    /// Serialized form of the whole store, byte-identical to the file it
    /// would produce.
    pub fn to_text(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records always serialize") + "\n")
            .collect()
    }
}
