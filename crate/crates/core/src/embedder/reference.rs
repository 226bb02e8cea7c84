use serde::{Deserialize, Serialize};

use super::{Embedder, Embedding, ZERO_NORM};
use crate::error::{Error, Result};
use crate::image::SpatialImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceEmbedderConfig {
    pub block_size: usize,
}

impl Default for ReferenceEmbedderConfig {
    fn default() -> Self {
        ReferenceEmbedderConfig { block_size: 8 }
    }
}

/// Deterministic stand-in for a recognition model.
///
/// The image is reduced to grayscale by channel mean, averaged over
/// non-overlapping `block_size × block_size` blocks, flattened row-major,
/// centered by subtracting the vector mean and L2-normalized. A 112×112 input
/// with the default block size yields a 196-dimensional embedding. Inputs
/// whose centered vector has norm below `1e-12` (constant images) map to the
/// zero vector.
#[derive(Debug, Clone, Default)]
pub struct ReferenceEmbedder {
    config: ReferenceEmbedderConfig,
}

impl ReferenceEmbedder {
    pub fn new(config: ReferenceEmbedderConfig) -> Result<Self> {
        if config.block_size == 0 {
            return Err(Error::InvalidConfig("reference block size must be positive".into()));
        }
        Ok(ReferenceEmbedder { config })
    }

    pub fn config(&self) -> ReferenceEmbedderConfig {
        self.config
    }
}

impl Embedder for ReferenceEmbedder {
    fn embed(&self, image: &SpatialImage) -> Result<Embedding> {
        let block = self.config.block_size;
        let (h, w, c) = (image.height(), image.width(), image.channels());
        if h % block != 0 || w % block != 0 {
            return Err(Error::InvalidInput(format!(
                "block size {block} does not divide image size {h}x{w}"
            )));
        }
        let (rows, cols) = (h / block, w / block);
        let mut sums = vec![0.0; rows * cols];
        let px = image.pixels();
        for r in 0..h {
            let row_base = (r / block) * cols;
            for col in 0..w {
                let offset = (r * w + col) * c;
                let gray: f64 = px[offset..offset + c].iter().sum::<f64>() / c as f64;
                sums[row_base + col / block] += gray;
            }
        }
        let area = (block * block) as f64;
        let mut values: Vec<f64> = sums.into_iter().map(|s| s / area).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < ZERO_NORM {
            values.iter_mut().for_each(|v| *v = 0.0);
        } else {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Embedding::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_embeds_to_zero() {
        let e = ReferenceEmbedder::default()
            .embed(&SpatialImage::constant(112, 112, 3, 0.7).unwrap())
            .unwrap();
        assert_eq!(e.dim(), 196);
        assert!(e.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hand_computed_16x16() {
        // Quadrant values 1, 2, 3, 4 (top-left, top-right, bottom-left, bottom-right).
        let img = SpatialImage::from_fn(16, 16, 1, |r, c, _| {
            1.0 + (c / 8) as f64 + 2.0 * (r / 8) as f64
        })
        .unwrap();
        let e = ReferenceEmbedder::default().embed(&img).unwrap();
        // Centered: (-1.5, -0.5, 0.5, 1.5); norm sqrt(5).
        let n = 5f64.sqrt();
        let expected = [-1.5 / n, -0.5 / n, 0.5 / n, 1.5 / n];
        for (a, b) in e.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_dividing_block() {
        let img = SpatialImage::constant(12, 16, 1, 0.0).unwrap();
        assert!(ReferenceEmbedder::default().embed(&img).is_err());
        assert!(ReferenceEmbedder::new(ReferenceEmbedderConfig { block_size: 0 }).is_err());
    }

    #[test]
    fn invariant_to_brightness_offset() {
        let img = SpatialImage::from_fn(16, 16, 3, |r, c, ch| ((r * 3 + c + ch) % 7) as f64 / 7.0).unwrap();
        let shifted = SpatialImage::new(16, 16, 3, img.pixels().iter().map(|p| p - 0.37).collect()).unwrap();
        let emb = ReferenceEmbedder::default();
        let (a, b) = (emb.embed(&img).unwrap(), emb.embed(&shifted).unwrap());
        assert!((a.norm() - 1.0).abs() < 1e-9);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
