//! Per-pair frequency-band importance.
//!
//! For a pair `(j, k)` and model `N`, the importance of band `b` is the
//! absolute change in similarity when `b` is removed from both images:
//!
//! ```text
//! h_b = | s(N(j), N(k)) - s(N(mask_b(j)), N(mask_b(k))) |
//! ```
//!
//! The raw vector is then rescaled to sum to one.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, Label, PairRecord};
use crate::embedder::{similarity, Embedder};
use crate::error::{Error, Result};
use crate::image::SpatialImage;
use crate::spectral::{self, forward_dft, inverse_dft, BandPartition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    raw: Vec<f64>,
    normalized: Vec<f64>,
}

impl ImportanceVector {
    pub fn from_raw(raw: Vec<f64>) -> Result<Self> {
        let normalized = normalize(&raw)?;
        Ok(ImportanceVector { raw, normalized })
    }

    /// Reassembles a vector whose normalized part was computed elsewhere
    /// (e.g. read back from a report). Only shape is checked.
    pub fn from_parts(raw: Vec<f64>, normalized: Vec<f64>) -> Result<Self> {
        if raw.len() != normalized.len() {
            return Err(Error::InvalidInput(format!(
                "raw has {} bands, normalized has {}",
                raw.len(),
                normalized.len()
            )));
        }
        Ok(ImportanceVector { raw, normalized })
    }

    pub fn num_bands(&self) -> usize {
        self.normalized.len()
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairExplanation {
    pub pair_id: u64,
    pub group: String,
    pub label: Label,
    pub base_similarity: f64,
    pub importance: ImportanceVector,
}

/// Rescales non-negative importances to sum to one.
///
/// Dividing by the minimum first and then by the sum gives the same result as
/// dividing by the sum directly, and the direct form stays defined when the
/// minimum is zero. An all-zero input yields the uniform vector.
pub fn normalize(h: &[f64]) -> Result<Vec<f64>> {
    if h.is_empty() {
        return Err(Error::EmptyInput("importance vector has no bands".into()));
    }
    if let Some((b, v)) = h.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "importance of band {b} is {v}; entries must be finite and non-negative"
        )));
    }
    let total: f64 = h.iter().sum();
    if total == 0.0 {
        return Ok(vec![1.0 / h.len() as f64; h.len()]);
    }
    Ok(h.iter().map(|v| v / total).collect())
}

/// Unmasked similarity and raw band importances for one image pair.
///
/// Each image is transformed once; every band is then removed from that
/// spectrum and inverted separately. All `2 + 2B` images go to the backend as
/// one batch.
pub fn raw_importance(
    probe: &SpatialImage,
    reference: &SpatialImage,
    partition: &BandPartition,
    backend: &dyn Embedder,
) -> Result<(f64, Vec<f64>)> {
    spectral::check_image(probe, partition)?;
    spectral::check_image(reference, partition)?;
    let probe_spec = forward_dft(probe)?;
    let ref_spec = forward_dft(reference)?;
    let bands = partition.num_bands();

    let mut images = Vec::with_capacity(2 + 2 * bands);
    images.push(probe.clone());
    images.push(reference.clone());
    for b in 0..bands {
        let mask = partition.mask(b)?;
        let masked = inverse_dft(&probe_spec.masked(&mask)?)
            .and_then(|p| Ok((p, inverse_dft(&ref_spec.masked(&mask)?)?)))
            .map_err(|e| e.in_band(b))?;
        images.push(masked.0);
        images.push(masked.1);
    }

    let embeddings = backend.embed_batch(&images).map_err(|e| match e {
        Error::Batch { index, source } if index >= 2 => source.in_band((index - 2) / 2),
        Error::Batch { source, .. } => *source,
        other => other,
    })?;
    let base = similarity(&embeddings[0], &embeddings[1])?;
    let h = (0..bands)
        .map(|b| {
            let masked = similarity(&embeddings[2 + 2 * b], &embeddings[3 + 2 * b]).map_err(|e| e.in_band(b))?;
            Ok((base - masked).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((base, h))
}

/// Loads both images of `record` (paths relative to `images_root`) and
/// explains the pair.
pub fn explain_pair(
    record: &PairRecord,
    images_root: &Path,
    partition: &BandPartition,
    backend: &dyn Embedder,
) -> Result<PairExplanation> {
    let run = || {
        let dims = (partition.height(), partition.width());
        let probe = dataset::load_image(images_root.join(&record.probe_path), dims)?;
        let reference = dataset::load_image(images_root.join(&record.reference_path), dims)?;
        explain_images(record, &probe, &reference, partition, backend)
    };
    run().map_err(|e| e.in_pair(record.pair_id))
}

/// Explains a pair whose images are already in memory.
pub fn explain_images(
    record: &PairRecord,
    probe: &SpatialImage,
    reference: &SpatialImage,
    partition: &BandPartition,
    backend: &dyn Embedder,
) -> Result<PairExplanation> {
    let (base_similarity, raw) = raw_importance(probe, reference, partition, backend)?;
    Ok(PairExplanation {
        pair_id: record.pair_id,
        group: record.group.clone(),
        label: record.label,
        base_similarity,
        importance: ImportanceVector::from_raw(raw)?,
    })
}

/// Explains every record on a pool of `threads` workers.
///
/// Output is in input order whatever the completion order. `progress` is
/// called with the number of finished pairs after each one completes.
pub fn explain_all(
    records: &[PairRecord],
    images_root: &Path,
    partition: &BandPartition,
    backend: &dyn Embedder,
    threads: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<Vec<PairExplanation>> {
    let done = AtomicUsize::new(0);
    let total = records.len();
    let work = |r: &PairRecord| {
        let out = explain_pair(r, images_root, partition, backend);
        progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
        out
    };
    if threads <= 1 {
        return records.iter().map(work).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {threads} workers: {e}")))?;
    pool.install(|| records.par_iter().map(work).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedder::ReferenceEmbedder;
    use std::path::PathBuf;

    fn record(label: Label) -> PairRecord {
        PairRecord {
            pair_id: 3,
            probe_path: PathBuf::from("a.png"),
            reference_path: PathBuf::from("b.png"),
            label,
            group: "G".into(),
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[0.2; 4]).unwrap(), vec![0.25; 4]);
        assert_eq!(normalize(&[1.0, 3.0]).unwrap(), vec![0.25, 0.75]);
        assert_eq!(normalize(&[0.0, 1.0, 3.0]).unwrap(), vec![0.0, 0.25, 0.75]);
        assert_eq!(normalize(&[0.0; 5]).unwrap(), vec![0.2; 5]);
    }

    #[test]
    fn normalize_matches_min_then_sum_route() {
        // With a strictly positive minimum both routes are defined.
        let h = [0.3, 0.05, 1.7, 0.4];
        let m = h.iter().cloned().fold(f64::INFINITY, f64::min);
        let scaled: Vec<f64> = h.iter().map(|v| v / m).collect();
        let total: f64 = scaled.iter().sum();
        for (a, b) in normalize(&h).unwrap().iter().zip(scaled.iter().map(|v| v / total)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_bad_entries() {
        assert!(matches!(normalize(&[1.0, -0.1]), Err(Error::InvalidInput(_))));
        assert!(matches!(normalize(&[1.0, f64::NAN]), Err(Error::InvalidInput(_))));
        assert!(matches!(normalize(&[f64::INFINITY]), Err(Error::InvalidInput(_))));
        assert!(normalize(&[]).is_err());
    }

    #[test]
    fn identical_images_have_unit_similarity() {
        let img = SpatialImage::from_fn(16, 16, 3, |r, c, ch| ((r * 5 + c * 3 + ch) % 9) as f64 / 4.5 - 1.0).unwrap();
        let p = spectral::build_partition(16, 16, 2.0).unwrap();
        let ex = explain_images(&record(Label::Genuine), &img, &img, &p, &ReferenceEmbedder::default()).unwrap();
        assert!((ex.base_similarity - 1.0).abs() < 1e-12);
        assert!((ex.importance.normalized().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_pair_is_degenerate_uniform() {
        let img = SpatialImage::constant(16, 16, 3, 0.2).unwrap();
        let p = spectral::build_partition(16, 16, 2.0).unwrap();
        let ex = explain_images(&record(Label::Genuine), &img, &img, &p, &ReferenceEmbedder::default()).unwrap();
        assert_eq!(ex.base_similarity, 0.0);
        assert!(ex.importance.raw().iter().all(|&h| h == 0.0));
        let uniform = 1.0 / p.num_bands() as f64;
        assert!(ex.importance.normalized().iter().all(|&v| (v - uniform).abs() < 1e-15));
    }

    #[test]
    fn band_without_energy_has_zero_importance() {
        // Pure horizontal cosine at 3 cycles: energy only at radius 3.
        let wave = |phase: f64| {
            SpatialImage::from_fn(16, 16, 1, move |_, c, _| {
                (2.0 * std::f64::consts::PI * 3.0 * c as f64 / 16.0 + phase).cos()
            })
            .unwrap()
        };
        let p = spectral::build_partition(16, 16, 2.0).unwrap();
        let (_, h) = raw_importance(&wave(0.0), &wave(0.4), &p, &ReferenceEmbedder::new(
            crate::embedder::ReferenceEmbedderConfig { block_size: 2 },
        ).unwrap())
        .unwrap();
        for (b, v) in h.iter().enumerate() {
            if b != 1 {
                assert!(v.abs() < 1e-6, "band {b}: {v}");
            }
        }
        assert!(h[1] > 1e-3);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let p = spectral::build_partition(16, 16, 2.0).unwrap();
        let a = SpatialImage::constant(16, 16, 3, 0.0).unwrap();
        let b = SpatialImage::constant(8, 16, 3, 0.0).unwrap();
        assert!(raw_importance(&a, &b, &p, &ReferenceEmbedder::default()).is_err());
    }
}
