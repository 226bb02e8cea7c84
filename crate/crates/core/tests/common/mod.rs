//! Direct-summation oracles shared by the integration and acceptance tests.
//! Nothing here calls into the spectral or embedder code under test.
#![allow(dead_code)]

use std::f64::consts::PI;

use freqlens::SpatialImage;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rustfft::num_complex::Complex64;

pub struct Rng(SplitMix64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(SplitMix64::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn image(&mut self, h: usize, w: usize, c: usize) -> SpatialImage {
        let pixels = (0..h * w * c).map(|_| self.range(-1.0, 1.0)).collect();
        SpatialImage::new(h, w, c, pixels).unwrap()
    }
}

pub fn band_of(u: usize, v: usize, h: usize, w: usize, s: f64) -> usize {
    let du = u as f64 - (h / 2) as f64;
    let dv = v as f64 - (w / 2) as f64;
    ((du * du + dv * dv).sqrt() / s).floor() as usize
}

pub fn num_bands(h: usize, w: usize, s: f64) -> usize {
    let mut max = 0;
    for u in 0..h {
        for v in 0..w {
            max = max.max(band_of(u, v, h, w, s));
        }
    }
    max + 1
}

/// Frequency of center-shifted index `u` on an axis of length `n`.
fn freq(u: usize, n: usize) -> f64 {
    u as f64 - (n / 2) as f64
}

/// Center-shifted DFT of one channel by direct summation.
pub fn dft(img: &SpatialImage, ch: usize) -> Vec<Complex64> {
    let (h, w) = (img.height(), img.width());
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for u in 0..h {
        for v in 0..w {
            let (fu, fv) = (freq(u, h), freq(v, w));
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..h {
                for n in 0..w {
                    let phase = -2.0 * PI * (fu * m as f64 / h as f64 + fv * n as f64 / w as f64);
                    acc += Complex64::from_polar(img.get(m, n, ch), phase);
                }
            }
            out[u * w + v] = acc;
        }
    }
    out
}

/// Inverse of [`dft`], keeping the real part.
pub fn idft(spec: &[Complex64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for m in 0..h {
        for n in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for u in 0..h {
                for v in 0..w {
                    let phase = 2.0 * PI * (freq(u, h) * m as f64 / h as f64 + freq(v, w) * n as f64 / w as f64);
                    acc += spec[u * w + v] * Complex64::from_polar(1.0, phase);
                }
            }
            out[m * w + n] = acc.re / (h * w) as f64;
        }
    }
    out
}

/// Image with band `b` removed from every channel.
pub fn mask(img: &SpatialImage, s: f64, b: usize) -> SpatialImage {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let mut pixels = vec![0.0; h * w * c];
    for ch in 0..c {
        let mut spec = dft(img, ch);
        for u in 0..h {
            for v in 0..w {
                if band_of(u, v, h, w, s) == b {
                    spec[u * w + v] = Complex64::new(0.0, 0.0);
                }
            }
        }
        for (i, x) in idft(&spec, h, w).into_iter().enumerate() {
            pixels[i * c + ch] = x;
        }
    }
    SpatialImage::new(h, w, c, pixels).unwrap()
}

/// Channel mean, block means, centered, unit length; zero when flat.
pub fn embed(img: &SpatialImage, block: usize) -> Vec<f64> {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let mut v = Vec::new();
    for br in 0..h / block {
        for bc in 0..w / block {
            let mut sum = 0.0;
            for r in br * block..(br + 1) * block {
                for col in bc * block..(bc + 1) * block {
                    for ch in 0..c {
                        sum += img.get(r, col, ch);
                    }
                }
            }
            v.push(sum / (block * block * c) as f64);
        }
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return vec![0.0; v.len()];
    }
    v.into_iter().map(|x| x / norm).collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < 1e-12 || nb < 1e-12 {
        return 0.0;
    }
    (a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)).clamp(-1.0, 1.0)
}

/// Base similarity and normalized band importance.
pub fn importance(p: &SpatialImage, r: &SpatialImage, s: f64, block: usize) -> (f64, Vec<f64>) {
    let base = cosine(&embed(p, block), &embed(r, block));
    let raw: Vec<f64> = (0..num_bands(p.height(), p.width(), s))
        .map(|b| (base - cosine(&embed(&mask(p, s, b), block), &embed(&mask(r, s, b), block))).abs())
        .collect();
    let total: f64 = raw.iter().sum();
    let norm = if total == 0.0 {
        vec![1.0 / raw.len() as f64; raw.len()]
    } else {
        raw.iter().map(|x| x / total).collect()
    };
    (base, norm)
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
