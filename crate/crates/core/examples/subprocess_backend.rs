//! Drive an external embedding process over the line-delimited JSON
//! protocol.
//!
//! The example re-launches itself with `--child` to play the model: the
//! child answers each request with the image's leading pixel values and
//! deliberately returns answers out of order. Any program that speaks the
//! protocol can be plugged in with `--backend subprocess:<command>`.
//!
//! ```bash
//! cargo run -p freqlens --example subprocess_backend
//! ```

use std::process::Command;
use std::time::Duration;

use freqlens::dataset::{Label, PairRecord};
use freqlens::embedder::{serve_echo, EchoOptions, SubprocessEmbedder};
use freqlens::importance::explain_images;
use freqlens::spectral::build_partition;
use freqlens::synthfix::{synthesize_image, SyntheticSpec};

fn main() -> freqlens::Result<()> {
    if std::env::args().any(|a| a == "--child") {
        let options = EchoOptions { dim: 256, shuffle_seed: Some(7), window: 8 };
        serve_echo(std::io::BufReader::new(std::io::stdin()), std::io::stdout().lock(), options)
            .expect("echo child");
        return Ok(());
    }

    let mut child = Command::new(std::env::current_exe().expect("own path"));
    child.arg("--child");
    let backend = SubprocessEmbedder::spawn(child, Duration::from_secs(30))?;
    println!("child speaks protocol with dim {}", backend.dim());

    let spec = SyntheticSpec::new(9, "demo", vec![0.0, 1.0, 1.0, 1.0]);
    let (probe, reference) = (synthesize_image(&spec, 1, 0)?, synthesize_image(&spec, 1, 1)?);
    let record = PairRecord {
        pair_id: 0,
        probe_path: "probe".into(),
        reference_path: "reference".into(),
        label: Label::Genuine,
        group: "demo".into(),
    };
    let partition = build_partition(112, 112, 4.0)?;
    let e = explain_images(&record, &probe, &reference, &partition, &backend)?;
    println!("similarity over the first 256 pixel values: {:.4}", e.base_similarity);
    for (b, h) in e.importance.normalized().iter().enumerate().take(8) {
        println!("band {b}: {h:.4}");
    }
    Ok(())
}
