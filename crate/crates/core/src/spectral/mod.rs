//! Forward/inverse 2-D DFT, radial band partitions and band masking.
//!
//! Spectra are stored center-shifted: the DC coefficient of each channel sits
//! at `(height / 2, width / 2)`. All channels of an image are transformed
//! independently but always masked with the same band.

mod fft;
mod partition;

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

pub use crate::image::SpatialImage;
use crate::error::{Error, Result};
pub use partition::{BandMask, BandPartition};

/// Absolute tolerance on the imaginary residue left by an inverse transform
/// of a conjugate-symmetric spectrum, scaled by the reconstructed magnitude
/// when that exceeds one.
pub const IMAGINARY_RESIDUE_TOLERANCE: f64 = 1e-6;

/// Center-shifted complex spectrum, one `height × width` plane per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    height: usize,
    width: usize,
    channels: usize,
    planes: Vec<Vec<Complex64>>,
    conjugate_symmetric: bool,
}

impl Spectrum {
    /// Builds a spectrum from center-shifted planes.
    ///
    /// `conjugate_symmetric` declares that the planes came from a real image;
    /// [`inverse_dft`] then refuses to silently drop a large imaginary part.
    pub fn from_planes(
        height: usize,
        width: usize,
        planes: Vec<Vec<Complex64>>,
        conjugate_symmetric: bool,
    ) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(Error::InvalidInput(format!(
                "spectrum must be at least 2x2, got {height}x{width}"
            )));
        }
        if planes.is_empty() || planes.iter().any(|p| p.len() != height * width) {
            return Err(Error::InvalidInput(format!(
                "spectrum planes must each hold {height}x{width} coefficients"
            )));
        }
        Ok(Spectrum {
            height,
            width,
            channels: planes.len(),
            planes,
            conjugate_symmetric,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::from_planes(
            height,
            width,
            vec![vec![Complex64::new(0.0, 0.0); height * width]; channels],
            true,
        )
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

    pub fn is_conjugate_symmetric(&self) -> bool {
        self.conjugate_symmetric
    }

    /// Coefficient at shifted coordinate `(u, v)` of `channel`.
    #[inline]
    pub fn get(&self, u: usize, v: usize, channel: usize) -> Complex64 {
        self.planes[channel][u * self.width + v]
    }

    pub fn plane(&self, channel: usize) -> &[Complex64] {
        &self.planes[channel]
    }

    /// Index of the DC coefficient in the shifted layout.
    pub fn dc_index(&self) -> (usize, usize) {
        (self.height / 2, self.width / 2)
    }

    /// Sum of squared coefficient magnitudes over all channels.
    pub fn total_energy(&self) -> f64 {
        self.planes
            .iter()
            .flat_map(|p| p.iter())
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Copy with every coefficient of the masked band set to zero.
    ///
    /// Radial bands are point-symmetric about DC, so a conjugate-symmetric
    /// spectrum stays conjugate-symmetric.
    pub fn masked(&self, mask: &BandMask<'_>) -> Result<Spectrum> {
        let partition = mask.partition();
        self.check_partition(partition)?;
        let band = mask.band() as u32;
        let zero = Complex64::new(0.0, 0.0);
        let planes = self
            .planes
            .iter()
            .map(|plane| {
                plane
                    .iter()
                    .zip(partition.band_index_map())
                    .map(|(&c, &b)| if b == band { zero } else { c })
                    .collect()
            })
            .collect();
        Ok(Spectrum {
            height: self.height,
            width: self.width,
            channels: self.channels,
            planes,
            conjugate_symmetric: self.conjugate_symmetric,
        })
    }

    fn check_partition(&self, partition: &BandPartition) -> Result<()> {
        if partition.height() != self.height || partition.width() != self.width {
            return Err(Error::InvalidInput(format!(
                "partition is {}x{}, spectrum is {}x{}",
                partition.height(),
                partition.width(),
                self.height,
                self.width
            )));
        }
        Ok(())
    }
}

/// Per-channel 2-D DFT followed by a center shift.
pub fn forward_dft(image: &SpatialImage) -> Result<Spectrum> {
    if let Some(p) = image.pixels().iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite pixel value {p}")));
    }
    let (h, w) = (image.height(), image.width());
    let planes = (0..image.channels())
        .map(|ch| {
            let mut plane: Vec<Complex64> = image
                .plane(ch)
                .into_iter()
                .map(|x| Complex64::new(x, 0.0))
                .collect();
            fft::fft2(&mut plane, h, w, FftDirection::Forward);
            fft::shift(&plane, h, w)
        })
        .collect();
    Ok(Spectrum {
        height: h,
        width: w,
        channels: image.channels(),
        planes,
        conjugate_symmetric: true,
    })
}

/// Un-shifts and inverse-transforms each channel, keeping the real part.
///
/// For spectra flagged conjugate-symmetric the discarded imaginary part must
/// stay within [`IMAGINARY_RESIDUE_TOLERANCE`].
pub fn inverse_dft(spectrum: &Spectrum) -> Result<SpatialImage> {
    let (h, w, channels) = (spectrum.height, spectrum.width, spectrum.channels);
    let scale = 1.0 / (h * w) as f64;
    let mut pixels = vec![0.0; h * w * channels];
    let mut max_imag = 0.0f64;
    let mut max_real = 0.0f64;
    for (ch, shifted) in spectrum.planes.iter().enumerate() {
        let mut plane = fft::unshift(shifted, h, w);
        fft::fft2(&mut plane, h, w, FftDirection::Inverse);
        for (i, c) in plane.iter().enumerate() {
            let (re, im) = (c.re * scale, c.im * scale);
            max_imag = max_imag.max(im.abs());
            max_real = max_real.max(re.abs());
            pixels[i * channels + ch] = re;
        }
    }
    if spectrum.conjugate_symmetric {
        let tolerance = IMAGINARY_RESIDUE_TOLERANCE * max_real.max(1.0);
        if max_imag > tolerance {
            return Err(Error::SymmetryViolation {
                residue: max_imag,
                tolerance,
            });
        }
    }
    Ok(SpatialImage::from_parts_unchecked(h, w, channels, pixels))
}

/// Partition of an `height × width` grid into rings of width `band_size`.
pub fn build_partition(height: usize, width: usize, band_size: f64) -> Result<BandPartition> {
    BandPartition::new(height, width, band_size)
}

/// Removes one frequency band from every channel of `image`.
pub fn mask_band(image: &SpatialImage, mask: &BandMask<'_>) -> Result<SpatialImage> {
    check_image(image, mask.partition())?;
    inverse_dft(&forward_dft(image)?.masked(mask)?)
}

/// Spectral energy per band, summed over channels.
pub fn band_energy(spectrum: &Spectrum, partition: &BandPartition) -> Result<Vec<f64>> {
    spectrum.check_partition(partition)?;
    let mut energy = vec![0.0; partition.num_bands()];
    for plane in &spectrum.planes {
        for (c, &b) in plane.iter().zip(partition.band_index_map()) {
            energy[b as usize] += c.norm_sqr();
        }
    }
    Ok(energy)
}

pub(crate) fn check_image(image: &SpatialImage, partition: &BandPartition) -> Result<()> {
    if image.height() != partition.height() || image.width() != partition.width() {
        return Err(Error::InvalidInput(format!(
            "image is {}x{}, partition is {}x{}",
            image.height(),
            image.width(),
            partition.height(),
            partition.width()
        )));
    }
    Ok(())
}
