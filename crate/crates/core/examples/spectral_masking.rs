//! Remove one radial frequency band from an image and watch where the
//! energy goes.
//!
//! ```bash
//! cargo run -p freqlens --example spectral_masking
//! ```

use freqlens::spectral::{band_energy, build_partition, forward_dft, mask_band};
use freqlens::SpatialImage;

fn main() -> freqlens::Result<()> {
    // Two gratings: a slow one (radius 2) and a fast one (radius 20).
    let image = SpatialImage::from_fn(112, 112, 1, |r, c, _| {
        let (r, c) = (r as f64, c as f64);
        let tau = std::f64::consts::TAU;
        0.5 * (tau * 2.0 * r / 112.0).sin() + 0.3 * (tau * 20.0 * c / 112.0).cos()
    })?;
    let partition = build_partition(112, 112, 4.0)?;
    println!("{} bands of width {}", partition.num_bands(), partition.band_size());

    let before = band_energy(&forward_dft(&image)?, &partition)?;
    let total: f64 = before.iter().sum();
    for (b, e) in before.iter().enumerate().filter(|(_, e)| **e > 1e-9 * total) {
        println!("band {b:>2}: {:5.1}% of energy", 100.0 * e / total);
    }

    let masked = mask_band(&image, &partition.mask(5)?)?;
    let after = band_energy(&forward_dft(&masked)?, &partition)?;
    println!(
        "after removing band 5: band 0 {:.1}%, band 5 {:.1e} (relative), max pixel change {:.3}",
        100.0 * after[0] / total,
        after[5] / total,
        masked.max_abs_diff(&image).unwrap_or(0.0)
    );
    Ok(())
}
