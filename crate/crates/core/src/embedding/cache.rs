//! Append-only embedding cache.
//!
//! File layout: the 8-byte magic `TGEMBC01`, then one record per embedding:
//!
//! ```text
//! key: [u8; 32]   SHA-256 of provider \0 model \0 text
//! dim: u32 LE
//! values: dim x f64 LE
//! ```

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use sha2::{Digest, Sha256};

use super::{EmbedError, EmbeddingVector};

const MAGIC: &[u8; 8] = b"TGEMBC01";

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheKey([u8; 32]);

impl CacheKey {
    pub fn new(provider: &str, model: &str, text: &str) -> Self {
        let mut h = Sha256::new();
        h.update(provider.as_bytes());
        h.update([0]);
        h.update(model.as_bytes());
        h.update([0]);
        h.update(text.as_bytes());
        Self(h.finalize().into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CacheKey({})", &self.to_hex()[..12])
    }
}

/// Many readers, one writer. Appends go straight to the backing file.
pub struct EmbeddingCache {
    entries: RwLock<HashMap<CacheKey, EmbeddingVector>>,
    file: Mutex<Option<File>>,
    path: Option<PathBuf>,
}

impl EmbeddingCache {
    pub fn in_memory() -> Self {
        Self {
            entries: RwLock::new(HashMap::new()),
            file: Mutex::new(None),
            path: None,
        }
    }

    /// Opens (or creates) a cache file and loads every record in it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let path = path.as_ref();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let entries = if bytes.is_empty() {
            file.write_all(MAGIC)?;
            HashMap::new()
        } else {
            decode(&bytes)?
        };
        Ok(Self {
            entries: RwLock::new(entries),
            file: Mutex::new(Some(file)),
            path: Some(path.to_path_buf()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &CacheKey) -> Option<EmbeddingVector> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    /// Stores a vector; existing keys are left untouched.
    pub fn insert(&self, key: CacheKey, vector: &EmbeddingVector) -> Result<(), EmbedError> {
        let mut file = self.file.lock().expect("cache file lock");
        if self.entries.read().expect("cache lock").contains_key(&key) {
            return Ok(());
        }
        if let Some(f) = file.as_mut() {
            f.write_all(&encode_record(&key, vector))?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert(key, vector.clone());
        Ok(())
    }

    /// Writes a fresh cache file containing `records` in order.
    pub fn write_file<'a>(
        path: impl AsRef<Path>,
        records: impl IntoIterator<Item = (CacheKey, &'a EmbeddingVector)>,
    ) -> Result<(), EmbedError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        for (key, v) in records {
            w.write_all(&encode_record(&key, v))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn encode_record(key: &CacheKey, v: &EmbeddingVector) -> Vec<u8> {
    let mut buf = Vec::with_capacity(36 + 8 * v.dimension());
    buf.extend_from_slice(&key.0);
    buf.extend_from_slice(&(v.dimension() as u32).to_le_bytes());
    for x in v.values() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf
}

fn decode(bytes: &[u8]) -> Result<HashMap<CacheKey, EmbeddingVector>, EmbedError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(EmbedError::CorruptCache("bad magic header".into()));
    }
    let mut entries = HashMap::new();
    let mut pos = MAGIC.len();
    while pos < bytes.len() {
        let start = pos;
        let truncated = || EmbedError::CorruptCache(format!("truncated record at byte {start}"));
        let key: [u8; 32] = bytes
            .get(pos..pos + 32)
            .ok_or_else(truncated)?
            .try_into()
            .expect("32 bytes");
        pos += 32;
        let dim = u32::from_le_bytes(
            bytes
                .get(pos..pos + 4)
                .ok_or_else(truncated)?
                .try_into()
                .expect("4 bytes"),
        ) as usize;
        pos += 4;
        let raw = bytes.get(pos..pos + 8 * dim).ok_or_else(truncated)?;
        pos += 8 * dim;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let v = EmbeddingVector::new(values)
            .map_err(|e| EmbedError::CorruptCache(format!("record at byte {start}: {e}")))?;
        entries.insert(CacheKey(key), v);
    }
    Ok(entries)
}
