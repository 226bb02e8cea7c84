//! Frequency-band importance for one image pair.
//!
//! With two image paths the pair is loaded from disk (112×112, 8-bit);
//! without arguments a synthetic pair is used.
//!
//! ```bash
//! cargo run -p freqlens --example explain_pair
//! cargo run -p freqlens --example explain_pair -- probe.png reference.png
//! ```

use std::path::Path;

use freqlens::dataset::{load_image, Label, PairRecord};
use freqlens::embedder::ReferenceEmbedder;
use freqlens::importance::explain_images;
use freqlens::spectral::build_partition;
use freqlens::synthfix::{synthesize_image, SyntheticSpec};

fn main() -> freqlens::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (probe, reference) = match args.as_slice() {
        [p, r] => (load_image(p, (112, 112))?, load_image(r, (112, 112))?),
        _ => {
            let mut profile = vec![0.0; 20];
            profile[2] = 1.0;
            profile[9] = 0.5;
            let spec = SyntheticSpec::new(42, "demo", profile);
            (synthesize_image(&spec, 0, 0)?, synthesize_image(&spec, 0, 1)?)
        }
    };
    let record = PairRecord {
        pair_id: 0,
        probe_path: Path::new("probe").into(),
        reference_path: Path::new("reference").into(),
        label: Label::Genuine,
        group: "demo".into(),
    };
    let partition = build_partition(112, 112, 4.0)?;
    let e = explain_images(&record, &probe, &reference, &partition, &ReferenceEmbedder::default())?;

    println!("similarity {:.4}", e.base_similarity);
    let max = e.importance.normalized().iter().cloned().fold(0.0, f64::max);
    for (b, (h, raw)) in e.importance.normalized().iter().zip(e.importance.raw()).enumerate() {
        let bar = "#".repeat((40.0 * h / max).round() as usize);
        println!("band {b:>2} {h:.4} (|Δs| {raw:.2e}) {bar}");
    }
    Ok(())
}
