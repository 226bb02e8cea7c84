//! Seeded synthetic fixtures with prescribed per-band spectral energy.
//!
//! Every image is built directly in the frequency domain on the
//! canonical 112×112 grid with the default band size. Each coordinate of
//! band `b` gets magnitude `sqrt(profile[b] / |band b|)`, so the band's
//! energy per channel equals `profile[b]`. An identity fixes a random phase
//! field; each instance of the identity jitters those phases. Phases are
//! mirrored so the spectrum is conjugate symmetric and the inverse transform
//! is real. The image is scaled by `1 / max|x|`, which lands it in
//! `[-1, 1]` without changing energy ratios, and stored as 8-bit PNG.
//!
//! Randomness comes from SplitMix64:
//!
//! ```text
//! state = state + 0x9E3779B97F4A7C15            (mod 2^64)
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9      (mod 2^64)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB      (mod 2^64)
//! output z ^ (z >> 31)
//! ```
//!
//! A uniform `f64` in `[0, 1)` is `(output >> 11) * 2^-53`.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rustfft::num_complex::Complex64;

use crate::config::DEFAULT_BAND_SIZE;
use crate::dataset::{unit_to_byte, Label, PairList, PairRecord, CANONICAL_HEIGHT, CANONICAL_WIDTH};
use crate::error::{Error, Result};
use crate::image::SpatialImage;
use crate::spectral::{build_partition, inverse_dft, BandPartition, Spectrum};

/// Channels of every generated image.
pub const CHANNELS: usize = 3;

/// Half-width of the uniform phase jitter between instances of one identity,
/// in radians.
pub const INSTANCE_PHASE_JITTER: f64 = 0.6;

/// Name of the pair list written next to the images.
pub const PAIRS_FILE: &str = "pairs.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub group_name: String,
    /// Target energy per band of the canonical partition. Missing trailing
    /// bands are zero.
    pub band_profile: Vec<f64>,
    pub num_identities: usize,
    /// Genuine pairs and imposter pairs each.
    pub pairs_per_label: usize,
}

impl SyntheticSpec {
    pub fn new(seed: u64, group_name: impl Into<String>, band_profile: Vec<f64>) -> Self {
        SyntheticSpec {
            seed,
            group_name: group_name.into(),
            band_profile,
            num_identities: 10,
            pairs_per_label: 25,
        }
    }

    fn validate(&self, partition: &BandPartition) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.group_name.is_empty()
            || !self
                .group_name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return bad(format!(
                "group name {:?} must be non-empty ASCII letters, digits, '_' or '-'",
                self.group_name
            ));
        }
        if self.band_profile.len() > partition.num_bands() {
            return bad(format!(
                "profile has {} bands, the grid has {}",
                self.band_profile.len(),
                partition.num_bands()
            ));
        }
        if self.band_profile.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("profile weights must be finite and non-negative".into());
        }
        let sizes = partition.band_sizes();
        if !self.band_profile.iter().enumerate().any(|(b, &w)| w > 0.0 && sizes[b] > 0) {
            return bad("profile needs a positive weight on a non-empty band".into());
        }
        if self.num_identities < 2 {
            return bad("at least two identities are needed for imposter pairs".into());
        }
        Ok(())
    }
}

fn uniform(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stream seed for one (fixture, identity, instance) triple. Instance
/// `u64::MAX` denotes the identity's base phases.
fn stream_seed(seed: u64, identity: usize, instance: u64) -> u64 {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let a = rng.next_u64() ^ (identity as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut rng = SplitMix64::seed_from_u64(a);
    rng.next_u64() ^ instance.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7)
}

/// Position of the conjugate partner of a center-shifted index.
fn mirror(u: usize, n: usize) -> usize {
    let k = (u + n - n / 2) % n;
    ((n - k) % n + n / 2) % n
}

/// In-memory image of `instance` of `identity`, before 8-bit quantization.
pub fn synthesize_image(spec: &SyntheticSpec, identity: usize, instance: usize) -> Result<SpatialImage> {
    let (h, w) = (CANONICAL_HEIGHT, CANONICAL_WIDTH);
    let partition = build_partition(h, w, DEFAULT_BAND_SIZE)?;
    spec.validate(&partition)?;
    if identity >= spec.num_identities {
        return Err(Error::InvalidInput(format!(
            "identity {identity} out of range for {} identities",
            spec.num_identities
        )));
    }
    let sizes = partition.band_sizes();
    let magnitude: Vec<f64> = (0..partition.num_bands())
        .map(|b| {
            let p = spec.band_profile.get(b).copied().unwrap_or(0.0);
            if sizes[b] == 0 {
                0.0
            } else {
                (p / sizes[b] as f64).sqrt()
            }
        })
        .collect();

    let mut base = SplitMix64::seed_from_u64(stream_seed(spec.seed, identity, u64::MAX));
    let mut jitter = SplitMix64::seed_from_u64(stream_seed(spec.seed, identity, instance as u64));
    let bands = partition.band_index_map();
    let mut planes = Vec::with_capacity(CHANNELS);
    for _ in 0..CHANNELS {
        let mut plane = vec![Complex64::new(0.0, 0.0); h * w];
        for u in 0..h {
            for v in 0..w {
                let (mu, mv) = (mirror(u, h), mirror(v, w));
                let here = u * w + v;
                let there = mu * w + mv;
                // Both draws happen for every coordinate so streams stay aligned.
                let phase = 2.0 * PI * uniform(&mut base) + INSTANCE_PHASE_JITTER * (2.0 * uniform(&mut jitter) - 1.0);
                if there < here {
                    plane[here] = plane[there].conj();
                    continue;
                }
                let m = magnitude[bands[here] as usize];
                plane[here] = if there == here {
                    // Self-conjugate coefficients are real.
                    Complex64::new(if phase.cos() >= 0.0 { m } else { -m }, 0.0)
                } else {
                    Complex64::from_polar(m, phase)
                };
            }
        }
        planes.push(plane);
    }
    let image = inverse_dft(&Spectrum::from_planes(h, w, planes, true)?)?;
    let peak = image.pixels().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if peak == 0.0 {
        return Ok(image);
    }
    let pixels = image.pixels().iter().map(|x| x / peak).collect();
    SpatialImage::new(h, w, CHANNELS, pixels)
}

/// Encodes an image as 8-bit RGB PNG bytes.
pub fn encode_png(image: &SpatialImage) -> Result<Vec<u8>> {
    if image.channels() != CHANNELS {
        return Err(Error::InvalidInput(format!("expected {CHANNELS} channels, got {}", image.channels())));
    }
    let bytes: Vec<u8> = image.pixels().iter().map(|&x| unit_to_byte(x)).collect();
    let rgb = image::RgbImage::from_raw(image.width() as u32, image.height() as u32, bytes)
        .ok_or_else(|| Error::InvalidInput("pixel buffer does not match dimensions".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    rgb.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::InvalidInput(format!("png encoding failed: {e}")))?;
    Ok(out.into_inner())
}

fn image_path(spec: &SyntheticSpec, identity: usize, instance: usize) -> PathBuf {
    PathBuf::from(&spec.group_name).join(format!("{identity:03}_{instance:02}.png"))
}

/// Pair slots of one group. Genuine pair `p` compares two instances of
/// identity `p mod n`; imposter pair `p` compares that identity with a
/// different one.
/// `(identity, instance)` of an image.
type Slot = (usize, usize);

fn pair_slots(spec: &SyntheticSpec) -> Vec<(Slot, Slot, Label)> {
    let n = spec.num_identities;
    let mut slots = Vec::with_capacity(2 * spec.pairs_per_label);
    for p in 0..spec.pairs_per_label {
        let (a, k) = (p % n, p / n);
        slots.push(((a, 2 * k), (a, 2 * k + 1), Label::Genuine));
    }
    for p in 0..spec.pairs_per_label {
        let (a, k) = (p % n, p / n);
        let b = (a + 1 + k % (n - 1)) % n;
        slots.push(((a, 2 * k), (b, 2 * k + 1), Label::Imposter));
    }
    slots
}

/// Writes one fixture: PNGs under `out_dir/<group>/` and `out_dir/pairs.csv`.
pub fn generate_fixture(spec: &SyntheticSpec, out_dir: impl AsRef<Path>) -> Result<PairList> {
    generate_fixtures(std::slice::from_ref(spec), out_dir)
}

/// Writes several groups into one fixture directory with a shared pair list.
/// Pair ids run in order: each group's genuine pairs, then its imposters.
pub fn generate_fixtures(specs: &[SyntheticSpec], out_dir: impl AsRef<Path>) -> Result<PairList> {
    let out_dir = out_dir.as_ref();
    if specs.is_empty() {
        return Err(Error::InvalidConfig("no groups to generate".into()));
    }
    let mut names = BTreeSet::new();
    for s in specs {
        if !names.insert(&s.group_name) {
            return Err(Error::InvalidConfig(format!("group {:?} listed twice", s.group_name)));
        }
    }
    let mut records = Vec::new();
    for spec in specs {
        let group_dir = out_dir.join(&spec.group_name);
        std::fs::create_dir_all(&group_dir)
            .map_err(|e| Error::io(format!("creating {}", group_dir.display()), e))?;
        let slots = pair_slots(spec);
        let mut written = BTreeSet::new();
        for &(probe, reference, label) in &slots {
            for (identity, instance) in [probe, reference] {
                if written.insert((identity, instance)) {
                    let path = out_dir.join(image_path(spec, identity, instance));
                    let png = encode_png(&synthesize_image(spec, identity, instance)?)?;
                    std::fs::write(&path, png).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
                }
            }
            records.push(PairRecord {
                pair_id: records.len() as u64,
                probe_path: image_path(spec, probe.0, probe.1),
                reference_path: image_path(spec, reference.0, reference.1),
                label,
                group: spec.group_name.clone(),
            });
        }
    }
    let pairs = PairList::new(records)?;
    let csv_path = out_dir.join(PAIRS_FILE);
    std::fs::write(&csv_path, pairs.to_csv()?).map_err(|e| Error::io(format!("writing {}", csv_path.display()), e))?;
    Ok(pairs)
}
