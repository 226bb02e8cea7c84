use crate::error::{Error, Result};

/// Radial decomposition of the center-shifted frequency grid into rings of
/// equal width.
///
/// Coordinate `(u, v)` belongs to band `⌊r / band_size⌋`, where `r` is its
/// Euclidean distance from the DC index `(height / 2, width / 2)`. Corners
/// outside the inscribed circle follow the same rule, so the outermost band
/// may be only partly populated.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPartition {
    height: usize,
    width: usize,
    band_size: f64,
    num_bands: usize,
    band_index_map: Vec<u32>,
    band_sizes: Vec<usize>,
}

impl BandPartition {
    pub fn new(height: usize, width: usize, band_size: f64) -> Result<Self> {
        if !(band_size.is_finite() && band_size > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "band size must be positive and finite, got {band_size}"
            )));
        }
        if height < 2 || width < 2 {
            return Err(Error::InvalidInput(format!(
                "frequency grid must be at least 2x2, got {height}x{width}"
            )));
        }
        let (ch, cw) = ((height / 2) as f64, (width / 2) as f64);
        let mut band_index_map = Vec::with_capacity(height * width);
        let mut num_bands = 0usize;
        for u in 0..height {
            let du = u as f64 - ch;
            for v in 0..width {
                let dv = v as f64 - cw;
                let r = (du * du + dv * dv).sqrt();
                let band = (r / band_size).floor() as usize;
                num_bands = num_bands.max(band + 1);
                band_index_map.push(band as u32);
            }
        }
        let mut band_sizes = vec![0usize; num_bands];
        for &b in &band_index_map {
            band_sizes[b as usize] += 1;
        }
        Ok(BandPartition {
            height,
            width,
            band_size,
            num_bands,
            band_index_map,
            band_sizes,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn band_size(&self) -> f64 {
        self.band_size
    }

    pub fn num_bands(&self) -> usize {
        self.num_bands
    }

    /// Band id of shifted-grid coordinate `(u, v)`.
    #[inline]
    pub fn band_of(&self, u: usize, v: usize) -> usize {
        self.band_index_map[u * self.width + v] as usize
    }

    /// Row-major `height × width` band ids.
    pub fn band_index_map(&self) -> &[u32] {
        &self.band_index_map
    }

    /// Number of grid coordinates in each band.
    pub fn band_sizes(&self) -> &[usize] {
        &self.band_sizes
    }

    pub fn mask(&self, band: usize) -> Result<BandMask<'_>> {
        BandMask::new(self, band)
    }
}

/// Selects one band of a partition for removal.
#[derive(Debug, Clone, Copy)]
pub struct BandMask<'a> {
    partition: &'a BandPartition,
    band: usize,
}

impl<'a> BandMask<'a> {
    pub fn new(partition: &'a BandPartition, band: usize) -> Result<Self> {
        if band >= partition.num_bands {
            return Err(Error::InvalidInput(format!(
                "band {band} out of range, partition has {} bands",
                partition.num_bands
            )));
        }
        Ok(BandMask { partition, band })
    }

    pub fn partition(&self) -> &'a BandPartition {
        self.partition
    }

    pub fn band(&self) -> usize {
        self.band
    }
}
