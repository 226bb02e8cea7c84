//! Serve embeddings from disk instead of running a model.
//!
//! A store maps image content to an embedding. To explain a pair offline,
//! the store needs the pair's two images plus every band-masked variant of
//! each; this example fills it from the reference embedder and checks the
//! explanation is unchanged when read back through the store.
//!
//! ```bash
//! cargo run -p freqlens --example precomputed_store -- /tmp/store
//! ```

use std::path::PathBuf;

use freqlens::dataset::{Label, PairRecord};
use freqlens::embedder::{BackendDescriptor, Embedder, ReferenceEmbedder, StoreWriter};
use freqlens::importance::explain_images;
use freqlens::spectral::{build_partition, mask_band};
use freqlens::synthfix::{synthesize_image, SyntheticSpec};

fn main() -> freqlens::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("freqlens-store"));
    let spec = SyntheticSpec::new(3, "demo", vec![0.2, 1.0, 1.0, 0.5, 0.2]);
    let probe = synthesize_image(&spec, 0, 0)?;
    let reference = synthesize_image(&spec, 0, 1)?;
    let partition = build_partition(112, 112, 4.0)?;
    let model = ReferenceEmbedder::default();

    let mut writer = StoreWriter::create(&dir, 196)?;
    for (name, image) in [("probe", &probe), ("reference", &reference)] {
        writer.insert(name, image, &model.embed(image)?)?;
        for b in 0..partition.num_bands() {
            let masked = mask_band(image, &partition.mask(b)?)?;
            writer.insert(format!("{name}/band{b:02}"), &masked, &model.embed(&masked)?)?;
        }
    }
    let index = writer.finish()?;
    println!("{} embeddings written to {}", index.entries.len(), dir.display());

    let record = PairRecord {
        pair_id: 0,
        probe_path: "probe".into(),
        reference_path: "reference".into(),
        label: Label::Genuine,
        group: "demo".into(),
    };
    let store = format!("precomputed:{}", dir.display()).parse::<BackendDescriptor>()?.open()?;
    let live = explain_images(&record, &probe, &reference, &partition, &model)?;
    let stored = explain_images(&record, &probe, &reference, &partition, store.as_ref())?;
    let drift = live
        .importance
        .normalized()
        .iter()
        .zip(stored.importance.normalized())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("largest per-band difference, live vs stored (f32) embeddings: {drift:.2e}");
    Ok(())
}
