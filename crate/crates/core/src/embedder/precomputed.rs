//! Content-addressed embedding store.
//!
//! ```text
//! <store>/index.json        {"dim": D, "entries": {"<image key>": {"hash": H, "file": "H.f32"} | {"error": "..."}}}
//! <store>/<H>.f32           D little-endian f32 values
//! ```
//!
//! `H` is the lowercase hex SHA-256 of the image as the host sees it:
//! `height`, `width`, `channels` as little-endian u32, followed by the pixels
//! as little-endian f32, row-major `height × width × channels`, in the
//! `[-1, 1]` convention (an 8-bit value `p` becomes `f32(p / 127.5 - 1)`
//! computed in f64). Lookups are by content, so masked variants of an image
//! can be stored next to the original under keys of the writer's choosing.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Embedder, Embedding};
use crate::error::{Error, Result};
use crate::image::SpatialImage;

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreIndex {
    pub dim: usize,
    pub entries: BTreeMap<String, StoreEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StoreEntry {
    Embedding { hash: String, file: String },
    Error { error: String },
}

pub fn image_content_hash(image: &SpatialImage) -> String {
    let mut hasher = Sha256::new();
    for n in [image.height(), image.width(), image.channels()] {
        hasher.update((n as u32).to_le_bytes());
    }
    hasher.update(image.to_f32_le_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Read-only store loaded fully into memory.
#[derive(Debug, Clone)]
pub struct PrecomputedStore {
    root: PathBuf,
    index: StoreIndex,
    by_hash: HashMap<String, Embedding>,
}

impl PrecomputedStore {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let index_path = root.join(INDEX_FILE);
        let text = fs::read_to_string(&index_path)
            .map_err(|e| Error::io(format!("reading {}", index_path.display()), e))?;
        let index: StoreIndex = serde_json::from_str(&text)?;
        let mut by_hash = HashMap::new();
        for entry in index.entries.values() {
            let StoreEntry::Embedding { hash, file } = entry else {
                continue;
            };
            if by_hash.contains_key(hash) {
                continue;
            }
            let path = root.join(file);
            let bytes = fs::read(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            if bytes.len() != index.dim * 4 {
                return Err(Error::InvalidInput(format!(
                    "{} holds {} bytes, expected {} for dimension {}",
                    path.display(),
                    bytes.len(),
                    index.dim * 4,
                    index.dim
                )));
            }
            let values = bytes
                .chunks_exact(4)
                .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
                .collect();
            by_hash.insert(hash.clone(), Embedding::new(values)?);
        }
        Ok(PrecomputedStore { root, index, by_hash })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index(&self) -> &StoreIndex {
        &self.index
    }

    pub fn dim(&self) -> usize {
        self.index.dim
    }

    pub fn len(&self) -> usize {
        self.by_hash.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_hash.is_empty()
    }

    /// Embedding recorded under an index key (usually an image path).
    pub fn get_by_key(&self, key: &str) -> Result<&Embedding> {
        match self.index.entries.get(key) {
            Some(StoreEntry::Embedding { hash, .. }) => self
                .by_hash
                .get(hash)
                .ok_or_else(|| Error::MissingEmbedding(key.to_string())),
            Some(StoreEntry::Error { error }) => Err(Error::MissingEmbedding(format!("{key} ({error})"))),
            None => Err(Error::MissingEmbedding(key.to_string())),
        }
    }
}

impl Embedder for PrecomputedStore {
    fn embed(&self, image: &SpatialImage) -> Result<Embedding> {
        let hash = image_content_hash(image);
        self.by_hash
            .get(&hash)
            .cloned()
            .ok_or(Error::MissingEmbedding(format!("content hash {hash}")))
    }
}

/// Builds a store directory. Nothing is visible to readers until
/// [`StoreWriter::finish`] writes the index.
#[derive(Debug)]
pub struct StoreWriter {
    root: PathBuf,
    index: StoreIndex,
}

impl StoreWriter {
    pub fn create(root: impl AsRef<Path>, dim: usize) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(|e| Error::io(format!("creating {}", root.display()), e))?;
        Ok(StoreWriter {
            root,
            index: StoreIndex {
                dim,
                entries: BTreeMap::new(),
            },
        })
    }

    pub fn insert(&mut self, key: impl Into<String>, image: &SpatialImage, embedding: &Embedding) -> Result<String> {
        if embedding.dim() != self.index.dim {
            return Err(Error::InvalidInput(format!(
                "embedding has dimension {}, store holds {}",
                embedding.dim(),
                self.index.dim
            )));
        }
        let hash = image_content_hash(image);
        let file = format!("{hash}.f32");
        let bytes: Vec<u8> = embedding
            .values()
            .iter()
            .flat_map(|&v| (v as f32).to_le_bytes())
            .collect();
        let path = self.root.join(&file);
        fs::write(&path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        self.index
            .entries
            .insert(key.into(), StoreEntry::Embedding { hash: hash.clone(), file });
        Ok(hash)
    }

    pub fn insert_error(&mut self, key: impl Into<String>, message: impl Into<String>) {
        self.index
            .entries
            .insert(key.into(), StoreEntry::Error { error: message.into() });
    }

    pub fn finish(self) -> Result<StoreIndex> {
        let path = self.root.join(INDEX_FILE);
        let mut text = serde_json::to_string_pretty(&self.index)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        Ok(self.index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(seed: f64) -> SpatialImage {
        SpatialImage::from_fn(4, 4, 3, |r, c, ch| ((r + 2 * c + ch) as f64 * seed).sin()).unwrap()
    }

    #[test]
    fn empty_store_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        StoreWriter::create(dir.path(), 4).unwrap().finish().unwrap();
        let store = PrecomputedStore::open(dir.path()).unwrap();
        assert!(store.is_empty());
        assert!(matches!(store.embed(&img(1.0)), Err(Error::MissingEmbedding(_))));
    }

    #[test]
    fn lookup_by_content_and_key() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = StoreWriter::create(dir.path(), 3).unwrap();
        let e = Embedding::new(vec![0.1, -0.2, 0.3]).unwrap();
        w.insert("a.png", &img(1.0), &e).unwrap();
        w.insert_error("broken.png", "cannot decode");
        w.finish().unwrap();

        let store = PrecomputedStore::open(dir.path()).unwrap();
        let got = store.embed(&img(1.0)).unwrap();
        for (a, b) in got.values().iter().zip(e.values()) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(store.get_by_key("a.png").is_ok());
        assert!(store.get_by_key("broken.png").is_err());
        assert!(store.embed(&img(2.0)).is_err());
    }

    #[test]
    fn hash_depends_on_shape() {
        let a = SpatialImage::constant(2, 4, 1, 0.0).unwrap();
        let b = SpatialImage::constant(4, 2, 1, 0.0).unwrap();
        assert_ne!(image_content_hash(&a), image_content_hash(&b));
        assert_eq!(image_content_hash(&a).len(), 64);
    }

    #[test]
    fn rejects_truncated_embedding_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = StoreWriter::create(dir.path(), 2).unwrap();
        let hash = w.insert("x", &img(1.0), &Embedding::new(vec![1.0, 2.0]).unwrap()).unwrap();
        w.finish().unwrap();
        fs::write(dir.path().join(format!("{hash}.f32")), [0u8; 5]).unwrap();
        assert!(PrecomputedStore::open(dir.path()).is_err());
    }
}
