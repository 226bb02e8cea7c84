mod common;

use std::collections::BTreeMap;

use freqlens::embedder::{
    image_content_hash, BackendDescriptor, Embedder, Embedding, PrecomputedStore, StoreWriter,
};
use freqlens::{Error, SpatialImage};
use sha2::{Digest, Sha256};

/// Hash written out by hand from the documented layout.
fn expected_hash(img: &SpatialImage) -> String {
    let mut h = Sha256::new();
    for d in [img.height(), img.width(), img.channels()] {
        h.update((d as u32).to_le_bytes());
    }
    for &p in img.pixels() {
        h.update((p as f32).to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn hash_follows_documented_layout() {
    let mut rng = common::Rng::new(8);
    for (h, w, c) in [(2, 2, 1), (112, 112, 3), (5, 9, 3)] {
        let img = rng.image(h, w, c);
        assert_eq!(image_content_hash(&img), expected_hash(&img));
    }
}

#[test]
fn hand_written_store_is_readable() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = common::Rng::new(9);
    let images: Vec<_> = (0..5).map(|_| rng.image(16, 16, 3)).collect();
    let mut entries = BTreeMap::new();
    let mut expected = Vec::new();
    for (i, img) in images.iter().enumerate() {
        let hash = expected_hash(img);
        let values: Vec<f32> = (0..6).map(|k| (i * 10 + k) as f32 * 0.1).collect();
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        std::fs::write(dir.path().join(format!("{hash}.f32")), bytes).unwrap();
        entries.insert(format!("img{i}"), serde_json::json!({"hash": hash, "file": format!("{hash}.f32")}));
        expected.push(values);
    }
    entries.insert("broken".into(), serde_json::json!({"error": "face not found"}));
    let index = serde_json::json!({"dim": 6, "entries": entries});
    std::fs::write(dir.path().join("index.json"), index.to_string()).unwrap();

    let backend = format!("precomputed:{}", dir.path().display())
        .parse::<BackendDescriptor>()
        .unwrap()
        .open()
        .unwrap();
    for (img, values) in images.iter().zip(&expected) {
        let got = backend.embed(img).unwrap();
        for (g, v) in got.values().iter().zip(values) {
            assert!((g - f64::from(*v)).abs() <= 1e-6);
        }
    }
    let stranger = rng.image(16, 16, 3);
    assert!(matches!(backend.embed(&stranger).unwrap_err().root(), Error::MissingEmbedding(_)));
}

#[test]
fn writer_then_reader_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = common::Rng::new(10);
    let mut writer = StoreWriter::create(dir.path(), 4).unwrap();
    let mut pairs = Vec::new();
    for i in 0..20 {
        let img = rng.image(8, 8, 1);
        let e = Embedding::new((0..4).map(|_| rng.range(-3.0, 3.0)).collect()).unwrap();
        writer.insert(format!("k{i}"), &img, &e).unwrap();
        pairs.push((img, e));
    }
    writer.finish().unwrap();
    let store = PrecomputedStore::open(dir.path()).unwrap();
    assert_eq!((store.dim(), store.len()), (4, 20));
    for (img, e) in &pairs {
        let got = store.embed(img).unwrap();
        assert!(common::max_diff(got.values(), e.values()) <= 1e-6);
    }
}
