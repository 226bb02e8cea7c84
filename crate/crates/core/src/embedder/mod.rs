//! Face-embedding backends and similarity scoring.
//!
//! A backend stands in for the recognition model whose decisions are being
//! explained. Three kinds exist:
//!
//! * `reference`: a deterministic block-mean embedder, fast enough for
//!   desk-scale experiments and tests.
//! * `precomputed`: embeddings looked up by image content in an on-disk store.
//! * `subprocess`: an external process speaking the line-delimited JSON
//!   protocol in [`wire`].

mod precomputed;
mod reference;
mod subprocess;
pub mod wire;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::SpatialImage;

pub use precomputed::{image_content_hash, PrecomputedStore, StoreEntry, StoreIndex, StoreWriter};
pub use reference::{ReferenceEmbedder, ReferenceEmbedderConfig};
pub use subprocess::{serve_echo, EchoOptions, SubprocessEmbedder, DEFAULT_REQUEST_TIMEOUT};

/// Norm below which an embedding is treated as degenerate.
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite embedding value {v}")));
        }
        Ok(Embedding(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Result<Embedding> {
        Embedding::new(self.0.iter().map(|x| x * factor).collect())
    }
}

/// Cosine similarity, clamped to `[-1, 1]`. Degenerate (near-zero) vectors
/// score 0 against anything.
pub fn similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidInput(format!(
            "embedding dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na < ZERO_NORM || nb < ZERO_NORM {
        return Ok(0.0);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// A face-recognition model as seen by the explainer.
pub trait Embedder: Send + Sync {
    fn embed(&self, image: &SpatialImage) -> Result<Embedding>;

    /// Embeds every image, preserving order. Errors carry the failing index.
    fn embed_batch(&self, images: &[SpatialImage]) -> Result<Vec<Embedding>> {
        images
            .iter()
            .enumerate()
            .map(|(index, img)| {
                self.embed(img).map_err(|e| Error::Batch {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

impl<T: Embedder + ?Sized> Embedder for Arc<T> {
    fn embed(&self, image: &SpatialImage) -> Result<Embedding> {
        (**self).embed(image)
    }

    fn embed_batch(&self, images: &[SpatialImage]) -> Result<Vec<Embedding>> {
        (**self).embed_batch(images)
    }
}

impl<T: Embedder + ?Sized> Embedder for Box<T> {
    fn embed(&self, image: &SpatialImage) -> Result<Embedding> {
        (**self).embed(image)
    }

    fn embed_batch(&self, images: &[SpatialImage]) -> Result<Vec<Embedding>> {
        (**self).embed_batch(images)
    }
}

pub fn embed(backend: &dyn Embedder, image: &SpatialImage) -> Result<Embedding> {
    backend.embed(image)
}

pub fn batch_embed(backend: &dyn Embedder, images: &[SpatialImage]) -> Result<Vec<Embedding>> {
    backend.embed_batch(images)
}

/// Which backend to use and how to reach it.
///
/// Textual form: `reference`, `reference:<block_size>`, `precomputed:<dir>`
/// or `subprocess:<command line>`.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendDescriptor {
    Reference(ReferenceEmbedderConfig),
    Precomputed { store: PathBuf },
    Subprocess { command: String, timeout: Duration },
}

impl BackendDescriptor {
    pub fn reference() -> Self {
        BackendDescriptor::Reference(ReferenceEmbedderConfig::default())
    }

    pub fn open(&self) -> Result<Box<dyn Embedder>> {
        Ok(match self {
            BackendDescriptor::Reference(cfg) => Box::new(ReferenceEmbedder::new(*cfg)?),
            BackendDescriptor::Precomputed { store } => Box::new(PrecomputedStore::open(store)?),
            BackendDescriptor::Subprocess { command, timeout } => {
                Box::new(SubprocessEmbedder::spawn_command_line(command, *timeout)?)
            }
        })
    }
}

impl fmt::Display for BackendDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendDescriptor::Reference(cfg) if *cfg == ReferenceEmbedderConfig::default() => {
                f.write_str("reference")
            }
            BackendDescriptor::Reference(cfg) => write!(f, "reference:{}", cfg.block_size),
            BackendDescriptor::Precomputed { store } => write!(f, "precomputed:{}", store.display()),
            BackendDescriptor::Subprocess { command, .. } => write!(f, "subprocess:{command}"),
        }
    }
}

impl FromStr for BackendDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match (kind, arg) {
            ("reference", None) => Ok(Self::reference()),
            ("reference", Some(block)) => {
                let block_size = block.parse().map_err(|_| {
                    Error::InvalidConfig(format!("reference block size {block:?} is not an integer"))
                })?;
                Ok(BackendDescriptor::Reference(ReferenceEmbedderConfig { block_size }))
            }
            ("precomputed", Some(dir)) if !dir.is_empty() => Ok(BackendDescriptor::Precomputed {
                store: PathBuf::from(dir),
            }),
            ("subprocess", Some(cmd)) if !cmd.trim().is_empty() => Ok(BackendDescriptor::Subprocess {
                command: cmd.to_string(),
                timeout: DEFAULT_REQUEST_TIMEOUT,
            }),
            _ => Err(Error::InvalidConfig(format!(
                "unrecognized backend {s:?}; expected reference, precomputed:<dir> or subprocess:<cmd>"
            ))),
        }
    }
}

impl Serialize for BackendDescriptor {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BackendDescriptor {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    #[test]
    fn similarity_examples() {
        let v = emb(&[0.3, -1.2, 2.0]);
        assert!((similarity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(similarity(&emb(&[1.0, 0.0]), &emb(&[0.0, 2.0])).unwrap(), 0.0);
        let neg = v.scaled(-1.0).unwrap();
        assert!((similarity(&v, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_scores_zero() {
        let z = emb(&[0.0, 0.0]);
        assert_eq!(similarity(&z, &emb(&[1.0, 1.0])).unwrap(), 0.0);
        assert_eq!(similarity(&z, &z).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(
            similarity(&emb(&[1.0]), &emb(&[1.0, 2.0])),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn descriptor_round_trips_through_text() {
        for s in ["reference", "reference:4", "precomputed:/tmp/store", "subprocess:python3 adapter.py --dim 4"] {
            let d: BackendDescriptor = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        assert_eq!("reference:8".parse::<BackendDescriptor>().unwrap().to_string(), "reference");
        for bad in ["", "onnx", "precomputed:", "subprocess:  ", "reference:x"] {
            assert!(bad.parse::<BackendDescriptor>().is_err(), "{bad}");
        }
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn similarity_symmetric_and_scale_invariant(
            a in prop::collection::vec(-10.0f64..10.0, 6),
            b in prop::collection::vec(-10.0f64..10.0, 6),
            lambda in 1e-3f64..1e3,
        ) {
            let (a, b) = (emb(&a), emb(&b));
            prop_assert_eq!(similarity(&a, &b).unwrap(), similarity(&b, &a).unwrap());
            let s = similarity(&a, &b).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s));
            if a.norm() > 1e-6 && b.norm() > 1e-6 {
                let scaled = similarity(&a.scaled(lambda).unwrap(), &b).unwrap();
                prop_assert!((scaled - s).abs() < 1e-9);
            }
        }
    }
}
