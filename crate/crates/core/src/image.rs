use crate::error::{Error, Result};

/// Real-valued image tensor stored row-major as `height × width × channels`.
///
/// Pipeline images are 112×112×3 with values in `[-1, 1]`, but any finite
/// values are accepted: masked reconstructions routinely leave that range.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialImage {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl SpatialImage {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(Error::InvalidInput(format!(
                "image must be at least 2x2, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!(
                "image must have 1 or 3 channels, got {channels}"
            )));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::InvalidInput(format!(
                "pixel buffer has {} values, expected {}x{}x{} = {}",
                pixels.len(),
                height,
                width,
                channels,
                height * width * channels
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite pixel value {} at offset {i}",
                pixels[i]
            )));
        }
        Ok(SpatialImage {
            height,
            width,
            channels,
            pixels,
        })
    }

    /// Image with every pixel set to `value`.
    pub fn constant(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Builds an image from a per-pixel function `f(row, col, channel)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    pixels.push(f(r, c, ch));
                }
            }
        }
        Self::new(height, width, channels, pixels)
    }

    pub(crate) fn from_parts_unchecked(
        height: usize,
        width: usize,
        channels: usize,
        pixels: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(pixels.len(), height * width * channels);
        SpatialImage {
            height,
            width,
            channels,
            pixels,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.pixels[(row * self.width + col) * self.channels + channel]
    }

    /// One channel as a row-major `height × width` plane.
    pub fn plane(&self, channel: usize) -> Vec<f64> {
        self.pixels
            .iter()
            .skip(channel)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    /// Largest absolute pixel difference; `None` if the shapes differ.
    pub fn max_abs_diff(&self, other: &SpatialImage) -> Option<f64> {
        if self.height != other.height || self.width != other.width || self.channels != other.channels {
            return None;
        }
        Some(
            self.pixels
                .iter()
                .zip(&other.pixels)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Pixel payload as 32-bit little-endian floats, row-major H×W×C.
    pub fn to_f32_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() * 4);
        for &p in &self.pixels {
            out.extend_from_slice(&(p as f32).to_le_bytes());
        }
        out
    }
}
